#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "metroq/sdp.hpp"
#include "test_helpers.hpp"

using namespace metroq;
using namespace mqtest;

namespace {

void add_constant(SdpProblem::Block& blk, const MatC& c) {
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j)
            if (c(i, j) != cxd(0, 0)) blk.constant.push_back({i, j, c(i, j)});
}

void add_term(SdpProblem::Block& blk, int var, const MatC& a) {
    SdpProblem::Term t;
    t.var = var;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (a(i, j) != cxd(0, 0)) t.entries.push_back({i, j, a(i, j)});
    blk.terms.push_back(std::move(t));
}

// Exterior-penalty gradient descent with a rho ladder; independent of the
// interior-point implementation path.
double penalty_oracle(const SdpProblem& p, const VecD& start, int iters_per_level = 40000) {
    const int n = p.num_vars();
    VecD x = start;
    VecD c(n);
    for (int i = 0; i < n; ++i) c(i) = p.objective[static_cast<size_t>(i)];

    auto neg_part = [](const MatC& f) {
        Eigen::SelfAdjointEigenSolver<MatC> es(f);
        MatC out = MatC::Zero(f.rows(), f.cols());
        for (int k = 0; k < es.eigenvalues().size(); ++k)
            if (es.eigenvalues()(k) < 0)
                out += es.eigenvalues()(k) * es.eigenvectors().col(k) *
                       es.eigenvectors().col(k).adjoint();
        return out;
    };
    auto value_and_grad = [&](const VecD& xx, double rho, VecD& grad) {
        double val = c.dot(xx);
        grad = c;
        for (size_t j = 0; j < p.blocks.size(); ++j) {
            const MatC f = p.block_value(static_cast<int>(j), xx);
            const MatC neg = neg_part(f);
            val += rho * neg.squaredNorm();
            for (const auto& t : p.blocks[j].terms) {
                cxd inner = 0;
                for (const auto& e : t.entries) inner += std::conj(e.value) * neg(e.row, e.col);
                grad(t.var) += 2.0 * rho * inner.real();
            }
        }
        return val;
    };

    for (double rho : {1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8}) {
        double step = 1.0 / rho;
        VecD grad(n), trial_grad(n);
        double val = value_and_grad(x, rho, grad);
        for (int it = 0; it < iters_per_level; ++it) {
            VecD trial = x - step * grad;
            const double tval = value_and_grad(trial, rho, trial_grad);
            if (tval < val) {
                x = trial;
                val = tval;
                grad = trial_grad;
                step *= 1.2;
            } else {
                step *= 0.5;
                if (step < 1e-18) break;
            }
        }
    }
    return c.dot(x);
}

}  // namespace

TEST_CASE("embed_hermitian: identity and sigma_y spectra") {
    CHECK(max_abs(MatD(embed_hermitian(MatC::Identity(2, 2)) - MatD::Identity(4, 4))) == 0.0);

    const MatD e = embed_hermitian(pauli_y());
    Eigen::SelfAdjointEigenSolver<MatD> es(e);
    CHECK(es.eigenvalues()(0) == doctest::Approx(-1.0));
    CHECK(es.eigenvalues()(1) == doctest::Approx(-1.0));
    CHECK(es.eigenvalues()(2) == doctest::Approx(1.0));
    CHECK(es.eigenvalues()(3) == doctest::Approx(1.0));
}

TEST_CASE("embed_hermitian: minimum eigenvalue preserved on random input") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const MatC h = random_hermitian(5, rng);
        Eigen::SelfAdjointEigenSolver<MatC> ec(h);
        Eigen::SelfAdjointEigenSolver<MatD> er(embed_hermitian(h));
        CHECK(std::abs(ec.eigenvalues().minCoeff() - er.eigenvalues().minCoeff()) < 1e-12);
    }
}

TEST_CASE("solve: eigenvalue LP  min lambda s.t. lambda I >= diag(1,3)") {
    SdpProblem p;
    const int lam = p.add_var("lambda");
    p.set_objective(lam, 1.0);
    auto& blk = p.add_block(2);
    MatC c(2, 2);
    c << -1, 0, 0, -3;
    add_constant(blk, c);
    add_term(blk, lam, MatC::Identity(2, 2));

    const SdpSolution sol = solve(p, 1e-9);
    CHECK(sol.status == SdpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("solve: min Tr(CX) over the density-matrix simplex") {
    SdpProblem p;
    const HermVarHandle x = add_herm_var(p, 2, "X");
    p.set_objective(x.base + 0, 0.2);
    p.set_objective(x.base + 1, 0.9);
    auto& blk = p.add_block(2);
    add_herm_var_to_block(blk, x, 0);
    SdpProblem::EqRow row;
    row.terms = {{x.base + 0, 1.0}, {x.base + 1, 1.0}};
    row.rhs = 1.0;
    p.equalities.push_back(row);

    const SdpSolution sol = solve(p, 1e-9);
    CHECK(sol.status == SdpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(0.2).epsilon(1e-7));
    const MatC xv = x.value(sol.x);
    CHECK(xv(0, 0).real() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("solve: constructed optimum and penalty-descent oracle agree") {
    std::mt19937_64 rng(202);
    for (int trial = 0; trial < 3; ++trial) {
        // Instance with a known optimum from a complementary primal-dual pair.
        const int n = 4, m = 6;
        std::vector<MatC> A(n);
        for (auto& a : A) a = random_hermitian(m, rng);
        // X* PSD rank 3 and S* PSD rank 3 on orthogonal supports.
        const MatC u = random_complex(m, m, rng);
        Eigen::HouseholderQR<MatC> qr(u);
        const MatC q = qr.householderQ();
        MatC xstar = MatC::Zero(m, m), sstar = MatC::Zero(m, m);
        for (int k = 0; k < 3; ++k) xstar += q.col(k) * q.col(k).adjoint() * (1.0 + k);
        for (int k = 3; k < 6; ++k) sstar += q.col(k) * q.col(k).adjoint() * (0.5 + k);
        VecD xopt(n);
        for (int i = 0; i < n; ++i) xopt(i) = std::uniform_real_distribution<>(-1, 1)(rng);

        SdpProblem p;
        for (int i = 0; i < n; ++i) p.add_var("x" + std::to_string(i));
        MatC c0 = sstar;
        for (int i = 0; i < n; ++i) {
            p.set_objective(i, (A[static_cast<size_t>(i)] * xstar).trace().real());
            c0 -= xopt(i) * A[static_cast<size_t>(i)];
        }
        auto& blk = p.add_block(m);
        add_constant(blk, c0);
        for (int i = 0; i < n; ++i) add_term(blk, i, A[static_cast<size_t>(i)]);

        double expected = 0.0;
        for (int i = 0; i < n; ++i) expected += p.objective[static_cast<size_t>(i)] * xopt(i);

        // Degenerate random instances may legitimately stop on the tolerance
        // ladder; the achieved gap is still far below what the values need.
        const SdpSolution sol = solve(p, 1e-9);
        CHECK((sol.status == SdpStatus::Optimal ||
               (sol.status == SdpStatus::NumericalLimit && sol.gap <= 1e-6)));
        CHECK(std::abs(sol.objective - expected) < 1e-6 * std::max(1.0, std::abs(expected)));

        const double oracle = penalty_oracle(p, xopt + 0.3 * VecD::Random(n));
        CHECK(std::abs(sol.objective - oracle) < 1e-5 * std::max(1.0, std::abs(oracle)));
    }
}

TEST_CASE("solve: weak duality and nonnegative reported gap") {
    std::mt19937_64 rng(303);
    SdpProblem p;
    const int lam = p.add_var("lambda");
    p.set_objective(lam, 1.0);
    auto& blk = p.add_block(4);
    add_constant(blk, MatC(-random_psd(4, rng)));
    add_term(blk, lam, MatC::Identity(4, 4));
    const SdpSolution sol = solve(p, 1e-9);
    CHECK(sol.status == SdpStatus::Optimal);
    CHECK(sol.gap >= -1e-12);
    CHECK(sol.gap <= 1e-8);
}

TEST_CASE("solve: invariance under variable and block reordering") {
    std::mt19937_64 rng(404);
    const MatC h1 = random_hermitian(3, rng);
    const MatC h2 = random_hermitian(3, rng);

    auto build = [&](bool swap_vars, bool swap_blocks) {
        SdpProblem p;
        int a, b;
        if (!swap_vars) {
            a = p.add_var("a");
            b = p.add_var("b");
        } else {
            b = p.add_var("b");
            a = p.add_var("a");
        }
        p.set_objective(a, 1.0);
        p.set_objective(b, 2.0);
        auto mk1 = [&](SdpProblem::Block& blk) {
            add_constant(blk, MatC(MatC::Identity(3, 3) - h1));
            add_term(blk, a, MatC::Identity(3, 3));
            add_term(blk, b, h2);
        };
        auto mk2 = [&](SdpProblem::Block& blk) {
            add_constant(blk, MatC::Identity(2, 2));
            MatC m(2, 2);
            m << 1, 0, 0, -1;
            add_term(blk, b, m);
        };
        if (!swap_blocks) {
            mk1(p.add_block(3));
            mk2(p.add_block(2));
        } else {
            mk2(p.add_block(2));
            mk1(p.add_block(3));
        }
        return solve(p, 1e-9).objective;
    };

    const double base = build(false, false);
    CHECK(std::abs(build(true, false) - base) < 1e-9 * std::max(1.0, std::abs(base)));
    CHECK(std::abs(build(false, true) - base) < 1e-9 * std::max(1.0, std::abs(base)));
}

TEST_CASE("solve: scaling covariance") {
    std::mt19937_64 rng(505);
    const MatC h = random_psd(3, rng);
    auto build = [&](double scale) {
        SdpProblem p;
        const int lam = p.add_var("lambda");
        p.set_objective(lam, scale);
        auto& blk = p.add_block(3);
        add_constant(blk, MatC(-scale * h));
        add_term(blk, lam, MatC(scale * MatC::Identity(3, 3)));
        return solve(p, 1e-9).objective;
    };
    const double base = build(1.0);
    const double scaled = build(7.5);
    // Block data and objective scaled by c > 0: same minimizer, objective x c.
    CHECK(std::abs(scaled - 7.5 * base) < 1e-7 * std::max(1.0, std::abs(base)));
}

TEST_CASE("solve: infeasible and unbounded detection") {
    {
        SdpProblem p;
        const int lam = p.add_var("lambda");
        p.set_objective(lam, 1.0);
        auto& blk = p.add_block(2);
        add_constant(blk, MatC(-MatC::Identity(2, 2)));
        MatC zero = MatC::Zero(2, 2);
        add_term(blk, lam, zero);  // lambda never helps
        const SdpSolution sol = solve(p, 1e-9);
        CHECK(sol.status == SdpStatus::Infeasible);
    }
    {
        SdpProblem p;
        const int t = p.add_var("t");
        p.set_objective(t, -1.0);  // min -t with t >= 0 unbounded
        auto& blk = p.add_block(1);
        add_term(blk, t, MatC::Identity(1, 1));
        const SdpSolution sol = solve(p, 1e-9);
        CHECK(sol.status == SdpStatus::Unbounded);
    }
    {
        SdpProblem p;
        const int t = p.add_var("t");
        p.set_objective(t, 1.0);
        auto& blk = p.add_block(1);
        add_term(blk, t, MatC::Identity(1, 1));
        SdpProblem::EqRow r1{{{t, 1.0}}, 1.0};
        SdpProblem::EqRow r2{{{t, 1.0}}, 2.0};
        p.equalities.push_back(r1);
        p.equalities.push_back(r2);
        CHECK(solve(p, 1e-9).status == SdpStatus::Infeasible);
    }
}

TEST_CASE("solve: complex Hermitian data exercises the embedding") {
    // min lambda s.t. lambda I >= H for a genuinely complex H.
    std::mt19937_64 rng(606);
    const MatC h = random_hermitian(4, rng);
    Eigen::SelfAdjointEigenSolver<MatC> es(h);

    SdpProblem p;
    const int lam = p.add_var("lambda");
    p.set_objective(lam, 1.0);
    auto& blk = p.add_block(4);
    add_constant(blk, MatC(-h));
    add_term(blk, lam, MatC::Identity(4, 4));
    const SdpSolution sol = solve(p, 1e-9);
    CHECK(sol.status == SdpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-8));
}

TEST_CASE("problem json round trip") {
    SdpProblem p;
    const int lam = p.add_var("lambda");
    p.set_objective(lam, 1.0);
    p.maximize = true;
    auto& blk = p.add_block(2);
    add_constant(blk, MatC(pauli_y()));
    add_term(blk, lam, MatC(-MatC::Identity(2, 2)));
    SdpProblem::EqRow row{{{lam, 2.0}}, 3.0};
    p.equalities.push_back(row);

    const SdpProblem q = SdpProblem::load_json(p.dump_json());
    CHECK(q.maximize == p.maximize);
    CHECK(q.var_names == p.var_names);
    CHECK(q.objective == p.objective);
    CHECK(q.blocks.size() == 1);
    CHECK(q.blocks[0].side == 2);
    CHECK(q.equalities.size() == 1);
    CHECK(q.equalities[0].rhs == 3.0);
    const VecD x = VecD::Constant(1, 0.25);
    CHECK(max_abs(MatC(q.block_value(0, x) - p.block_value(0, x))) == 0.0);
}
