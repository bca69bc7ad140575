// Copyright 2026 The Audflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// The differentiable primitive set. Exactly what the cochlea-to-cortex
// pipeline and the two task heads need, nothing more: elementwise
// arithmetic, scalar broadcast, power with learnable exponent, pointwise
// nonlinearities, reductions, shape ops, dense/conv linear maps, and
// real FFTs whose gradient is the adjoint transform. Complex values are
// carried as paired real/imaginary arrays.

#ifndef AUDFLOW_OPS_H_
#define AUDFLOW_OPS_H_

#include <vector>

#include "audflow/tape.hpp"

namespace audflow {

// ---- elementwise, same shape ----
Var Add(Tape& t, Var a, Var b);
Var Sub(Tape& t, Var a, Var b);
Var Mul(Tape& t, Var a, Var b);
Var Div(Tape& t, Var a, Var b);

// ---- constant broadcast ----
Var AddConst(Tape& t, Var x, double c);
Var MulConst(Tape& t, Var x, double c);
Var Neg(Tape& t, Var x);
// Elementwise multiply by a constant (non-learnable) tensor of equal shape.
Var CMul(Tape& t, Var x, const Tensor& c);

// ---- scalar (1-element Var) broadcast ----
// y = s * x, gradients to both x and s.
Var Scale(Tape& t, Var x, Var s);
// y = x + c * s (s scalar), used for mean subtraction.
Var AddScaled(Tape& t, Var x, Var s, double c);

// ---- powers ----
Var PowConst(Tape& t, Var x, double p);
// y = x^a with scalar learnable exponent a; defined for x >= 0 only.
// At x = 0 both partials are taken as 0 (subgradient choice; see docs).
Var PowScalarExp(Tape& t, Var x, Var a);
// x shape [C, N], a shape [C]: row k raised to a[k].
Var PowChannels(Tape& t, Var x, Var a);

// ---- pointwise nonlinearities ----
Var Exp(Tape& t, Var x);
Var Log(Tape& t, Var x);
Var Relu(Tape& t, Var x);
Var Gelu(Tape& t, Var x);  // tanh approximation
Var Sigmoid(Tape& t, Var x);
Var Cos(Tape& t, Var x);

// ---- reductions ----
Var SumAll(Tape& t, Var x);
Var MeanAll(Tape& t, Var x);
// Mean over one axis of an N-d tensor.
Var MeanAxis(Tape& t, Var x, int axis);
// Scalar mean absolute difference. Subgradient 0 where a == b.
Var L1(Tape& t, Var a, Var b);

// ---- shape ----
Var Reshape(Tape& t, Var x, Shape s);
Var Transpose2D(Tape& t, Var x);
Var SliceAxis(Tape& t, Var x, int axis, int64_t start, int64_t len);
Var Concat(Tape& t, const std::vector<Var>& xs, int axis);
// Every |stride|-th element along the last axis, starting at 0.
Var DecimateCols(Tape& t, Var x, int64_t stride);
// [C, N] -> [C, N]; row k of output = row k-1 of input, row 0 = zeros.
Var RowShiftDown(Tape& t, Var x);

// y[i,j] = u[i] + v[j]; the separable exponent/phase grids of the STRF
// kernels are built from this.
Var OuterAdd(Tape& t, Var u, Var v);

// ---- dense linear maps ----
Var MatMul(Tape& t, Var a, Var b);                    // [m,k]x[k,n]
Var Affine(Tape& t, Var w, Var x, Var b);             // w[o,i] x[i,n] + b[o]

// ---- convolutions ----
// input [Cin,H,W], weight [Cout,Cin,kh,kw] (odd kh,kw), bias [Cout];
// 2-D cross-correlation with zero same-padding, stride 1.
Var Conv2D(Tape& t, Var input, Var weight, Var bias);
// Single-channel same-padded cross-correlation, FFT-backed; differentiable
// w.r.t. both input [H,W] and kernel [kh,kw].
Var Corr2D(Tape& t, Var input, Var kernel);

// ---- real FFTs along the last axis ----
// x [..., N] -> [..., 2, N/2+1] (row 0 real, row 1 imaginary).
Var RFFT(Tape& t, Var x);
// X [..., 2, B] -> [..., n], normalized so IRFFT(RFFT(x)) == x.
Var IRFFT(Tape& t, Var x, int64_t n);

// ---- fused spectral stages (linear; gradients are adjoints) ----
// X = rfft(waveform) as [2,B]; resp [C,B] constant real responses.
// Returns the C band signals [C, n] = irfft(resp_k .* X).
Var FilterbankApply(Tape& t, Var x_spec, const Tensor& resp, int64_t n);
// spec [C,2,B] times complex row (hr + i*hi), hr/hi shape [B].
Var ComplexRowMul(Tape& t, Var spec, Var hr, Var hi);

// ---- STFT plumbing ----
// Gather of reflect-padded, Hann-ready frames: x [N] -> [F, win] with
// frame m starting at m*hop - win/2 in signal coordinates.
Var FrameSignal(Tape& t, Var x, int64_t win, int64_t hop);
// Adjoint-style scatter-add: frames [F, win] -> [N] (same index map as
// FrameSignal, reflected taps folded back in).
Var OverlapAdd(Tape& t, Var frames, int64_t hop, int64_t n);
// re,im [F,B] -> [F,2,B].
Var StackReIm(Tape& t, Var re, Var im);

// ---- losses ----
// logits [T, C]; labels one id per row, -1 = unlabeled (ignored).
// Mean over labeled rows of -log softmax(logits)[label].
Var CrossEntropy(Tape& t, Var logits, const std::vector<int>& labels);

// Non-tape conv plumbing, shared with the model gradient checker.
namespace convdetail {
void Im2Col(const double* im, int64_t cin, int64_t h, int64_t w, int64_t kh,
            int64_t kw, double* col);
void Col2Im(const double* col, int64_t cin, int64_t h, int64_t w, int64_t kh,
            int64_t kw, double* im);
}  // namespace convdetail

}  // namespace audflow

#endif  // AUDFLOW_OPS_H_
