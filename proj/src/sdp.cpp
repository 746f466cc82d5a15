#include "metroq/sdp.hpp"

#include <json.hpp>

#include "conelp.hpp"

namespace metroq {

MatD embed_hermitian(const MatC& h) {
    const long long m = h.rows();
    require(h.cols() == m, "embed_hermitian requires a square matrix");
    MatD out(2 * m, 2 * m);
    out.topLeftCorner(m, m) = h.real();
    out.bottomRightCorner(m, m) = h.real();
    out.topRightCorner(m, m) = -h.imag();
    out.bottomLeftCorner(m, m) = h.imag();
    return out;
}

MatC unembed_dual(const MatD& x) {
    const long long m = x.rows() / 2;
    require(x.rows() == 2 * m && x.cols() == 2 * m, "unembed_dual requires an even side");
    MatC out(m, m);
    out.real() = 0.5 * (x.topLeftCorner(m, m) + x.bottomRightCorner(m, m));
    out.imag() = 0.5 * (x.bottomLeftCorner(m, m) - x.topRightCorner(m, m));
    return out;
}

std::string to_string(SdpStatus s) {
    switch (s) {
        case SdpStatus::Optimal: return "Optimal";
        case SdpStatus::Infeasible: return "Infeasible";
        case SdpStatus::Unbounded: return "Unbounded";
        case SdpStatus::NumericalLimit: return "NumericalLimit";
    }
    return "?";
}

MatC SdpProblem::block_value(int j, const VecD& x) const {
    const Block& blk = blocks[static_cast<size_t>(j)];
    MatC m = MatC::Zero(blk.side, blk.side);
    for (const auto& e : blk.constant) m(e.row, e.col) += e.value;
    for (const auto& t : blk.terms)
        for (const auto& e : t.entries) m(e.row, e.col) += x(t.var) * e.value;
    return m;
}

namespace {

bool block_is_real(const SdpProblem::Block& blk) {
    for (const auto& e : blk.constant)
        if (e.value.imag() != 0.0) return false;
    for (const auto& t : blk.terms)
        for (const auto& e : t.entries)
            if (e.value.imag() != 0.0) return false;
    return true;
}

// svec rows of a Hermitian entry list after real embedding (or as-is when the
// block carries no imaginary part). Entry lists carry both triangles, so each
// upper-triangle svec slot is written by exactly one entry.
void accumulate_svec(const std::vector<SdpProblem::Entry>& entries, int side, bool real_block,
                     VecD& out) {
    const double rt2 = std::sqrt(2.0);
    auto put = [&](int i, int j, double v) {
        if (i > j) return;
        const int idx = j * (j + 1) / 2 + i;
        out(idx) += (i == j) ? v : rt2 * v;
    };
    for (const auto& e : entries) {
        const double re = e.value.real();
        const double im = e.value.imag();
        if (real_block) {
            put(e.row, e.col, re);
        } else {
            put(e.row, e.col, re);
            put(e.row + side, e.col + side, re);
            put(e.row, e.col + side, -im);
            put(e.row + side, e.col, im);
        }
    }
}

}  // namespace

SdpSolution solve(const SdpProblem& p, double tol) { return solve(p, SdpOptions{tol, 200, false}); }

SdpSolution solve(const SdpProblem& p, const SdpOptions& opts) {
    const int n = p.num_vars();
    SdpSolution sol;

    for (size_t j = 0; j < p.blocks.size(); ++j) {
        const VecD zero = VecD::Zero(n);
        require(is_hermitian(p.block_value(static_cast<int>(j), zero), 1e-9),
                "SDP block constant must be Hermitian");
        for (const auto& t : p.blocks[j].terms) {
            MatC m = MatC::Zero(p.blocks[j].side, p.blocks[j].side);
            for (const auto& e : t.entries) m(e.row, e.col) += e.value;
            require(is_hermitian(m, 1e-9), "SDP block coefficient must be Hermitian");
        }
    }

    // Eliminate equalities: x = x0 + Z v with Z an orthonormal null basis.
    VecD x0 = VecD::Zero(n);
    MatD Z;
    if (!p.equalities.empty()) {
        const int m = static_cast<int>(p.equalities.size());
        MatD E = MatD::Zero(m, n);
        VecD rhs(m);
        for (int r = 0; r < m; ++r) {
            for (const auto& [var, coeff] : p.equalities[static_cast<size_t>(r)].terms)
                E(r, var) += coeff;
            rhs(r) = p.equalities[static_cast<size_t>(r)].rhs;
        }
        Eigen::BDCSVD<MatD> svd(E, Eigen::ComputeThinU | Eigen::ComputeFullV);
        const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        const double cutoff = std::max(smax, 1.0) * 1e-12;
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > cutoff) ++rank;
        VecD sv_inv = VecD::Zero(svd.singularValues().size());
        for (int i = 0; i < rank; ++i) sv_inv(i) = 1.0 / svd.singularValues()(i);
        x0 = svd.matrixV().leftCols(sv_inv.size()) * sv_inv.asDiagonal() *
             svd.matrixU().transpose() * rhs;
        if ((E * x0 - rhs).norm() > 1e-8 * std::max(1.0, rhs.norm())) {
            sol.status = SdpStatus::Infeasible;
            sol.message = "inconsistent linear equalities";
            return sol;
        }
        Z = svd.matrixV().rightCols(n - rank);
    } else {
        Z = MatD::Identity(n, n);
    }

    conelp::Problem cp;
    std::vector<bool> real_block(p.blocks.size());
    int total = 0;
    for (size_t j = 0; j < p.blocks.size(); ++j) {
        real_block[j] = block_is_real(p.blocks[j]);
        const int side = real_block[j] ? p.blocks[j].side : 2 * p.blocks[j].side;
        cp.sides.push_back(side);
        total += conelp::svec_dim(side);
    }
    cp.h = VecD::Zero(total);
    MatD Gfull = MatD::Zero(total, n);
    int off = 0;
    for (size_t j = 0; j < p.blocks.size(); ++j) {
        const int sd = conelp::svec_dim(cp.sides[j]);
        VecD tmp = VecD::Zero(sd);
        accumulate_svec(p.blocks[j].constant, p.blocks[j].side, real_block[j], tmp);
        cp.h.segment(off, sd) = tmp;
        for (const auto& t : p.blocks[j].terms) {
            tmp.setZero();
            accumulate_svec(t.entries, p.blocks[j].side, real_block[j], tmp);
            Gfull.col(t.var).segment(off, sd) -= tmp;  // s = h - G x
        }
        off += sd;
    }
    cp.h -= Gfull * x0;  // s = h - G(x0 + Z v) folds into (h - G x0) - (G Z) v
    cp.G = Gfull * Z;
    VecD c_full(n);
    for (int i = 0; i < n; ++i) c_full(i) = p.objective[static_cast<size_t>(i)];
    if (p.maximize) c_full = -c_full;
    cp.c = Z.transpose() * c_full;

    conelp::Options copts;
    copts.feastol = copts.abstol = copts.reltol = opts.tol;
    copts.max_iters = opts.max_iters;
    copts.verbose = opts.verbose;
    const conelp::Result cres = conelp::solve(cp, copts);

    sol.iterations = cres.iterations;
    sol.gap = cres.relgap;
    sol.primal_res = cres.pres;
    sol.dual_res = cres.dres;
    sol.x = x0 + Z * cres.x;
    sol.objective = c_full.dot(sol.x);
    if (p.maximize) sol.objective = -sol.objective;
    for (size_t j = 0; j < p.blocks.size(); ++j) {
        if (real_block[j])
            sol.block_duals.push_back(cres.z[j].cast<cxd>());
        else
            sol.block_duals.push_back(unembed_dual(cres.z[j]));
    }
    switch (cres.status) {
        case conelp::Status::Optimal: sol.status = SdpStatus::Optimal; break;
        case conelp::Status::PrimalInfeasible: sol.status = SdpStatus::Infeasible; break;
        case conelp::Status::DualInfeasible: sol.status = SdpStatus::Unbounded; break;
        case conelp::Status::NumericalLimit: sol.status = SdpStatus::NumericalLimit; break;
    }
    if (sol.status == SdpStatus::NumericalLimit) sol.message = "iteration limit or stalled";
    return sol;
}

MatC HermVarHandle::basis_element(int k) const {
    MatC m = MatC::Zero(side, side);
    if (k < side) {
        m(k, k) = 1.0;
        return m;
    }
    int t = side;
    for (int i = 0; i < side; ++i)
        for (int j = i + 1; j < side; ++j) {
            if (k == t) {
                m(i, j) = m(j, i) = 1.0;
                return m;
            }
            if (k == t + 1) {
                m(i, j) = cxd(0, 1);
                m(j, i) = cxd(0, -1);
                return m;
            }
            t += 2;
        }
    fail("herm var scalar index out of range");
}

MatC HermVarHandle::value(const VecD& x) const {
    MatC m = MatC::Zero(side, side);
    for (int i = 0; i < side; ++i) m(i, i) = x(base + i);
    int t = side;
    for (int i = 0; i < side; ++i)
        for (int j = i + 1; j < side; ++j) {
            const cxd v(x(base + t), x(base + t + 1));
            m(i, j) = v;
            m(j, i) = std::conj(v);
            t += 2;
        }
    return m;
}

VecD HermVarHandle::coords(const MatC& m) const {
    require(m.rows() == side && m.cols() == side, "herm var coords: side mismatch");
    VecD x(num_scalars());
    for (int i = 0; i < side; ++i) x(i) = m(i, i).real();
    int t = side;
    for (int i = 0; i < side; ++i)
        for (int j = i + 1; j < side; ++j) {
            x(t) = m(i, j).real();
            x(t + 1) = m(i, j).imag();
            t += 2;
        }
    return x;
}

HermVarHandle add_herm_var(SdpProblem& p, int side, const std::string& name) {
    HermVarHandle h{side, p.num_vars()};
    for (int k = 0; k < side * side; ++k) p.add_var(name + "[" + std::to_string(k) + "]");
    return h;
}

void add_herm_var_to_block(SdpProblem::Block& block, const HermVarHandle& h, int offset,
                           double coeff) {
    for (int k = 0; k < h.num_scalars(); ++k) {
        const MatC basis = h.basis_element(k);
        SdpProblem::Term term;
        term.var = h.base + k;
        for (int i = 0; i < h.side; ++i)
            for (int j = 0; j < h.side; ++j)
                if (basis(i, j) != cxd(0, 0))
                    term.entries.push_back({offset + i, offset + j, coeff * basis(i, j)});
        block.terms.push_back(std::move(term));
    }
}

std::string SdpProblem::dump_json() const {
    nlohmann::json j;
    j["maximize"] = maximize;
    j["vars"] = var_names;
    j["objective"] = objective;
    nlohmann::json jb = nlohmann::json::array();
    for (const auto& blk : blocks) {
        nlohmann::json b;
        b["side"] = blk.side;
        nlohmann::json cst = nlohmann::json::array();
        for (const auto& e : blk.constant)
            cst.push_back({e.row, e.col, e.value.real(), e.value.imag()});
        b["constant"] = cst;
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& t : blk.terms) {
            nlohmann::json jt;
            jt["var"] = t.var;
            nlohmann::json ent = nlohmann::json::array();
            for (const auto& e : t.entries)
                ent.push_back({e.row, e.col, e.value.real(), e.value.imag()});
            jt["entries"] = ent;
            terms.push_back(jt);
        }
        b["terms"] = terms;
        jb.push_back(b);
    }
    j["blocks"] = jb;
    nlohmann::json je = nlohmann::json::array();
    for (const auto& row : equalities) {
        nlohmann::json r;
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& [var, coeff] : row.terms) terms.push_back({var, coeff});
        r["terms"] = terms;
        r["rhs"] = row.rhs;
        je.push_back(r);
    }
    j["equalities"] = je;
    return j.dump(2);
}

SdpProblem SdpProblem::load_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    SdpProblem p;
    p.maximize = j.at("maximize").get<bool>();
    p.var_names = j.at("vars").get<std::vector<std::string>>();
    p.objective = j.at("objective").get<std::vector<double>>();
    require(p.var_names.size() == p.objective.size(), "sdp json: vars/objective mismatch");
    for (const auto& b : j.at("blocks")) {
        Block blk;
        blk.side = b.at("side").get<int>();
        for (const auto& e : b.at("constant"))
            blk.constant.push_back(
                {e[0].get<int>(), e[1].get<int>(), cxd(e[2].get<double>(), e[3].get<double>())});
        for (const auto& t : b.at("terms")) {
            Term term;
            term.var = t.at("var").get<int>();
            for (const auto& e : t.at("entries"))
                term.entries.push_back(
                    {e[0].get<int>(), e[1].get<int>(), cxd(e[2].get<double>(), e[3].get<double>())});
            blk.terms.push_back(std::move(term));
        }
        p.blocks.push_back(std::move(blk));
    }
    for (const auto& r : j.at("equalities")) {
        EqRow row;
        row.rhs = r.at("rhs").get<double>();
        for (const auto& t : r.at("terms")) row.terms.push_back({t[0].get<int>(), t[1].get<double>()});
        p.equalities.push_back(std::move(row));
    }
    return p;
}

}  // namespace metroq
