#pragma once

#include <vector>

#include "metroq/common.hpp"

namespace metroq::conelp {

// Cone LP over a product of real symmetric PSD cones:
//   minimize c'x  subject to  h - G x in K.
// Block b occupies svec rows [row_offset(b), row_offset(b) + svec_dim(side_b)).
struct Problem {
    std::vector<int> sides;
    MatD G;  // (total svec dim) x n
    VecD h;
    VecD c;
};

enum class Status { Optimal, PrimalInfeasible, DualInfeasible, NumericalLimit };

struct Result {
    Status status = Status::NumericalLimit;
    VecD x;
    std::vector<MatD> z;  // dual block matrices
    double pobj = 0.0, dobj = 0.0;
    double gap = 0.0, relgap = 0.0;
    double pres = 0.0, dres = 0.0;
    int iterations = 0;
};

struct Options {
    double feastol = 1e-9;
    double abstol = 1e-9;
    double reltol = 1e-9;
    int max_iters = 200;
    bool verbose = false;
};

int svec_dim(int side);
VecD svec(const MatD& m);
MatD smat(const VecD& v, int side);

Result solve(const Problem& prob, const Options& opts);

}  // namespace metroq::conelp
