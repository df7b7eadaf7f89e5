#pragma once

#include "gyronet/tape.hpp"

namespace gyro::diff {

// Differentiable Poincare-ball operations, each built purely from the tape
// primitive set. c = 0 uses the exact Euclidean composition. Every function
// takes values already inside the ball; outputs of (+), (*), exp maps and
// matvec are safety-projected (the projection is recorded, so gradients flow
// through the clamped branch).

// Exactly-zero vectors get origin_eps added to the first coordinate before
// entering norm/atanh-bearing graphs.
ad::Var guard_origin(ad::Var x);

// Records the rescale onto radius (1-ball_eps)/sqrt(c) when the value lies
// outside; interior values pass through unrecorded.
ad::Var project_ball(ad::Var x, double c);

ad::Var mobius_add(ad::Var x, ad::Var y, double c);
ad::Var mobius_scalar(ad::Var r, ad::Var x, double c);  // r scalar
ad::Var mobius_scalar(double r, ad::Var x, double c);
ad::Var exp0(ad::Var v, double c);
ad::Var log0(ad::Var y, double c);
ad::Var exp_map(ad::Var x, ad::Var v, double c);
ad::Var log_map(ad::Var x, ad::Var y, double c);

// d_c(x, y); exactly-coincident inputs yield a recorded constant 0 (the true
// gradient of d and d^2 there).
ad::Var distance(ad::Var x, ad::Var y, double c);
ad::Var distance_sq(ad::Var x, ad::Var y, double c);

// M (*) x. Mx = 0 yields a recorded constant zero vector.
ad::Var mobius_matvec(ad::Var m, int rows, int cols, ad::Var x, double c);

// Shared kernel for gated products: the Mobius image of u = Mx given the
// original argument x, i.e. tanh((|u|/|x|) atanh(sqrt(c)|x|)) u/(sqrt(c)|u|).
ad::Var mobius_matvec_from(ad::Var u, ad::Var x, double c);

// diag(z) (*) v via the matvec rule with the diagonal matrix.
ad::Var diag_gate(ad::Var z, ad::Var v, double c);

// One hyperbolic MLR logit: (2|a'|/sqrt(c)) asinh(2 sqrt(c) <w,a'> /
// ((1-c|w|^2)|a'|)) with w = -p (+) x; equals 4<-p+x, a'> when c = 0.
ad::Var hyp_mlr_logit(ad::Var p, ad::Var a_prime, ad::Var x, double c);

}  // namespace gyro::diff
