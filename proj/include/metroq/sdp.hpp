#pragma once

#include <string>
#include <vector>

#include "metroq/common.hpp"

namespace metroq {

// H >= 0 iff [[Re H, -Im H], [Im H, Re H]] >= 0; doubles the side.
MatD embed_hermitian(const MatC& h);

// Maps a real symmetric dual of an embedded block back to the Hermitian dual
// it represents: X = (X11 + X22)/2 + i (X21 - X12)/2.
MatC unembed_dual(const MatD& x);

enum class SdpStatus { Optimal, Infeasible, Unbounded, NumericalLimit };

std::string to_string(SdpStatus s);

// Solver-facing normal form: real scalar variables, LMI blocks affine in the
// variables, sparse linear equalities, linear objective.
struct SdpProblem {
    struct Entry {
        int row = 0, col = 0;
        cxd value;
    };
    struct Term {
        int var = 0;
        std::vector<Entry> entries;  // full Hermitian entry list (both triangles)
    };
    struct Block {
        int side = 0;
        std::vector<Entry> constant;
        std::vector<Term> terms;
    };
    struct EqRow {
        std::vector<std::pair<int, double>> terms;
        double rhs = 0.0;
    };

    std::vector<std::string> var_names;
    std::vector<Block> blocks;
    std::vector<EqRow> equalities;
    std::vector<double> objective;
    bool maximize = false;

    int num_vars() const { return static_cast<int>(var_names.size()); }
    int add_var(const std::string& name) {
        var_names.push_back(name);
        objective.push_back(0.0);
        return num_vars() - 1;
    }
    Block& add_block(int side) {
        blocks.push_back(Block{side, {}, {}});
        return blocks.back();
    }
    void set_objective(int var, double coeff) { objective[static_cast<size_t>(var)] = coeff; }

    // Materializes block j at a variable assignment (for feasibility checks).
    MatC block_value(int j, const VecD& x) const;

    std::string dump_json() const;
    static SdpProblem load_json(const std::string& text);
};

struct SdpSolution {
    SdpStatus status = SdpStatus::NumericalLimit;
    double objective = 0.0;
    VecD x;
    std::vector<MatC> block_duals;
    double gap = 0.0;       // achieved relative duality gap
    double primal_res = 0.0;
    double dual_res = 0.0;
    int iterations = 0;
    std::string message;
};

struct SdpOptions {
    double tol = 1e-9;
    int max_iters = 200;
    bool verbose = false;
};

SdpSolution solve(const SdpProblem& p, const SdpOptions& opts = {});
SdpSolution solve(const SdpProblem& p, double tol);

// Convenience handle for a Hermitian matrix variable: side*side real scalars,
// ordered diag(0), ..., diag(m-1), then (re, im) per upper off-diagonal pair
// in row-major order.
struct HermVarHandle {
    int side = 0;
    int base = 0;  // index of the first scalar variable

    int num_scalars() const { return side * side; }
    // Hermitian basis element carried by scalar k, i.e. the matrix multiplying
    // variable (base + k).
    MatC basis_element(int k) const;
    // Assembles the matrix value from a solved variable vector.
    MatC value(const VecD& x) const;
    // The scalar coordinates of a given Hermitian matrix in this layout.
    VecD coords(const MatC& m) const;
};

HermVarHandle add_herm_var(SdpProblem& p, int side, const std::string& name);

// Appends `target` entries so that block gains coeff * H placed at the given
// offset on the diagonal, for every scalar of the Hermitian variable.
void add_herm_var_to_block(SdpProblem::Block& block, const HermVarHandle& h, int offset,
                           double coeff = 1.0);

}  // namespace metroq
