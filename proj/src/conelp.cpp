#include "conelp.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace metroq::conelp {

namespace {

constexpr double kStepDamping = 0.99;

struct BlockLayout {
    std::vector<int> offset;
    int total = 0;
    int degree = 0;
};

BlockLayout layout(const std::vector<int>& sides) {
    BlockLayout L;
    for (int m : sides) {
        L.offset.push_back(L.total);
        L.total += svec_dim(m);
        L.degree += m;
    }
    return L;
}

Eigen::VectorBlock<VecD> seg(VecD& v, const BlockLayout& L, size_t b, int side) {
    return v.segment(L.offset[b], svec_dim(side));
}
Eigen::VectorBlock<const VecD> seg(const VecD& v, const BlockLayout& L, size_t b, int side) {
    return v.segment(L.offset[b], svec_dim(side));
}

struct Scaling {
    // W(u) = svec(R' U R); lambda = W(z) = W^{-T}(s) is the scaled point.
    std::vector<MatD> R, Rinv;
    std::vector<MatD> lambda_mat;
    std::vector<Eigen::SelfAdjointEigenSolver<MatD>> lambda_eig;
};

MatD psd_power_sym(const Eigen::SelfAdjointEigenSolver<MatD>& es, double power) {
    VecD d = es.eigenvalues();
    for (int i = 0; i < d.size(); ++i) d(i) = std::pow(std::max(d(i), 0.0), power);
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

// Nesterov-Todd scaling of a PSD block pair (S, Z): W Z W = S with W = R R'.
bool compute_block_scaling(const MatD& S, const MatD& Z, MatD& R, MatD& Rinv, MatD& lambda) {
    Eigen::SelfAdjointEigenSolver<MatD> es_s(S);
    if (es_s.eigenvalues().minCoeff() <= 0) return false;
    const MatD s_half = psd_power_sym(es_s, 0.5);
    const MatD s_half_inv = psd_power_sym(es_s, -0.5);

    Eigen::SelfAdjointEigenSolver<MatD> es_m(MatD(s_half * Z * s_half));
    if (es_m.eigenvalues().minCoeff() <= 0) return false;

    R = s_half * psd_power_sym(es_m, -0.25);
    Rinv = psd_power_sym(es_m, 0.25) * s_half_inv;
    lambda = psd_power_sym(es_m, 0.5);
    return true;
}

// max(0, -min eig of X^{-1/2} D X^{-1/2}); the largest feasible step along D
// from X > 0 is 1 / (that value).
double blocking_rate(const Eigen::SelfAdjointEigenSolver<MatD>& x_eig, const MatD& d) {
    const MatD xinv_half = psd_power_sym(x_eig, -0.5);
    Eigen::SelfAdjointEigenSolver<MatD> es(MatD(xinv_half * d * xinv_half));
    return -es.eigenvalues().minCoeff();
}

// Solves lambda o U = V (Jordan product) given the eigendecomposition of lambda.
MatD jordan_solve(const Eigen::SelfAdjointEigenSolver<MatD>& lam, const MatD& v) {
    const MatD vt = lam.eigenvectors().transpose() * v * lam.eigenvectors();
    MatD out(v.rows(), v.cols());
    const VecD& d = lam.eigenvalues();
    for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < v.cols(); ++j) out(i, j) = 2.0 * vt(i, j) / (d(i) + d(j));
    return lam.eigenvectors() * out * lam.eigenvectors().transpose();
}

MatD jordan_product(const MatD& a, const MatD& b) { return 0.5 * (a * b + b * a); }

}  // namespace

int svec_dim(int side) { return side * (side + 1) / 2; }

VecD svec(const MatD& m) {
    const int n = static_cast<int>(m.rows());
    VecD v(svec_dim(n));
    const double rt2 = std::sqrt(2.0);
    int t = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i) v(t++) = (i == j) ? m(i, j) : rt2 * m(i, j);
    return v;
}

MatD smat(const VecD& v, int side) {
    MatD m(side, side);
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    int t = 0;
    for (int j = 0; j < side; ++j)
        for (int i = 0; i <= j; ++i) {
            const double x = v(t++);
            if (i == j)
                m(i, j) = x;
            else
                m(i, j) = m(j, i) = inv_rt2 * x;
        }
    return m;
}

Result solve(const Problem& prob, const Options& opts) {
    const int n = static_cast<int>(prob.c.size());
    const size_t nblocks = prob.sides.size();
    const BlockLayout L = layout(prob.sides);
    require(prob.G.rows() == L.total && prob.G.cols() == n, "conelp: G shape mismatch");
    require(prob.h.size() == L.total, "conelp: h size mismatch");

    Result res;
    res.x = VecD::Zero(n);

    const double cnorm = std::max(1.0, prob.c.norm());
    const double hnorm = std::max(1.0, prob.h.norm());

    VecD x = VecD::Zero(n);
    VecD s(L.total), z(L.total);
    for (size_t b = 0; b < nblocks; ++b) {
        seg(s, L, b, prob.sides[b]) = svec(MatD::Identity(prob.sides[b], prob.sides[b]));
        seg(z, L, b, prob.sides[b]) = svec(MatD::Identity(prob.sides[b], prob.sides[b]));
    }
    double tau = 1.0, kappa = 1.0;

    // Best iterate so far, returned when the iteration stalls numerically.
    VecD best_x = x, best_s = s, best_z = z;
    double best_tau = tau, best_kappa = kappa;
    double best_metric = std::numeric_limits<double>::infinity();
    int iters_since_best = 0;
    auto restore_best = [&]() {
        x = best_x;
        s = best_s;
        z = best_z;
        tau = best_tau;
        kappa = best_kappa;
    };

    auto pack_result = [&](Status st, int iters) {
        res.status = st;
        res.iterations = iters;
        res.x = x / tau;
        res.z.clear();
        for (size_t b = 0; b < nblocks; ++b)
            res.z.push_back(smat(VecD(VecD(seg(z, L, b, prob.sides[b])) / tau), prob.sides[b]));
        res.pobj = prob.c.dot(x) / tau;
        res.dobj = -prob.h.dot(z) / tau;
        res.gap = s.dot(z) / (tau * tau);
        const double denom = std::max({1.0, std::abs(res.pobj), std::abs(res.dobj)});
        res.relgap = res.gap / denom;
        res.pres = (s + prob.G * x - prob.h * tau).norm() / tau / hnorm;
        res.dres = (prob.G.transpose() * z + prob.c * tau).norm() / tau / cnorm;
        return res;
    };

    Scaling W;
    W.R.resize(nblocks);
    W.Rinv.resize(nblocks);
    W.lambda_mat.resize(nblocks);
    W.lambda_eig.resize(nblocks);

    MatD Gs(L.total, n);  // NT-scaled coefficient matrix, rebuilt per iteration
    Eigen::LLT<MatD> cholM;

    auto apply_w = [&](size_t b, const MatD& u) { return MatD(W.R[b].transpose() * u * W.R[b]); };
    auto apply_winv_t = [&](size_t b, const MatD& u) {
        return MatD(W.Rinv[b] * u * W.Rinv[b].transpose());
    };
    auto apply_winv = [&](size_t b, const MatD& u) {
        return MatD(W.Rinv[b].transpose() * u * W.Rinv[b]);
    };
    auto apply_wt = [&](size_t b, const MatD& u) { return MatD(W.R[b] * u * W.R[b].transpose()); };

    auto apply_wtw = [&](const VecD& u) {
        VecD out(L.total);
        for (size_t b = 0; b < nblocks; ++b) {
            const int m = prob.sides[b];
            out.segment(L.offset[b], svec_dim(m)) =
                svec(apply_wt(b, apply_w(b, smat(seg(u, L, b, m), m))));
        }
        return out;
    };

    // Solves [0 G'; G -W'W] (ux, uz) = (bx, bz) via uz = (W'W)^{-1}(G ux - bz),
    // with iterative refinement against the unscaled system.
    auto kkt_solve = [&](const VecD& bx, const VecD& bz, VecD& ux, VecD& uz) {
        auto base_solve = [&](const VecD& fx, const VecD& fz, VecD& ox, VecD& oz) {
            VecD fzs(L.total);
            for (size_t b = 0; b < nblocks; ++b) {
                const int m = prob.sides[b];
                fzs.segment(L.offset[b], svec_dim(m)) =
                    svec(apply_winv_t(b, smat(seg(fz, L, b, m), m)));
            }
            ox = cholM.solve(fx + Gs.transpose() * fzs);
            const VecD gz = Gs * ox - fzs;
            oz.resize(L.total);
            for (size_t b = 0; b < nblocks; ++b) {
                const int m = prob.sides[b];
                oz.segment(L.offset[b], svec_dim(m)) =
                    svec(apply_winv(b, smat(gz.segment(L.offset[b], svec_dim(m)), m)));
            }
        };
        base_solve(bx, bz, ux, uz);
        {
            const VecD r1 = bx - prob.G.transpose() * uz;
            const VecD r2 = bz - prob.G * ux + apply_wtw(uz);
            VecD cx, cz;
            base_solve(r1, r2, cx, cz);
            ux += cx;
            uz += cz;
        }
    };

    const int degree = L.degree + 1;

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        const VecD rx = prob.G.transpose() * z + prob.c * tau;
        const VecD rz = s + prob.G * x - prob.h * tau;
        const double rtau = kappa + prob.c.dot(x) + prob.h.dot(z);

        const double gap = s.dot(z) / (tau * tau);
        const double pobj = prob.c.dot(x) / tau;
        const double dobj = -prob.h.dot(z) / tau;
        const double denom = std::max({1.0, std::abs(pobj), std::abs(dobj)});
        const double relgap = gap / denom;
        const double pres = (rz / tau).norm() / hnorm;
        const double dres = (rx / tau).norm() / cnorm;
        const double metric = std::max({pres, dres, std::min(gap, relgap)});
        if (metric < 0.98 * best_metric) {
            best_metric = metric;
            best_x = x;
            best_s = s;
            best_z = z;
            best_tau = tau;
            best_kappa = kappa;
            iters_since_best = 0;
        } else if (++iters_since_best >= 8) {
            restore_best();
            return pack_result(Status::NumericalLimit, iter);
        }

        if (opts.verbose)
            std::fprintf(stderr,
                         "it %3d  pobj % .9e  dobj % .9e  gap %.2e  pres %.2e  dres %.2e  tau "
                         "%.2e  kappa %.2e\n",
                         iter, pobj, dobj, relgap, pres, dres, tau, kappa);

        if (pres <= opts.feastol && dres <= opts.feastol &&
            (gap <= opts.abstol || relgap <= opts.reltol))
            return pack_result(Status::Optimal, iter);

        const double hz = prob.h.dot(z);
        const double cx = prob.c.dot(x);
        if (hz < 0) {
            const double pinfres = (prob.G.transpose() * z).norm() / cnorm / (-hz);
            if (pinfres <= opts.feastol) return pack_result(Status::PrimalInfeasible, iter);
        }
        if (cx < 0) {
            const double dinfres = (prob.G * x + s).norm() / hnorm / (-cx);
            if (dinfres <= opts.feastol) return pack_result(Status::DualInfeasible, iter);
        }

        for (size_t b = 0; b < nblocks; ++b) {
            const int m = prob.sides[b];
            if (!compute_block_scaling(smat(seg(s, L, b, m), m), smat(seg(z, L, b, m), m),
                                       W.R[b], W.Rinv[b], W.lambda_mat[b])) {
                restore_best();
                return pack_result(Status::NumericalLimit, iter);
            }
            W.lambda_eig[b].compute(W.lambda_mat[b]);
            for (int col = 0; col < n; ++col)
                Gs.col(col).segment(L.offset[b], svec_dim(m)) = svec(
                    apply_winv_t(b, smat(prob.G.col(col).segment(L.offset[b], svec_dim(m)), m)));
        }
        MatD M = Gs.transpose() * Gs;
        const double reg = 1e-14 * std::max(1.0, M.trace() / std::max(1, n));
        M.diagonal().array() += reg;
        cholM.compute(M);
        if (cholM.info() != Eigen::Success) {
            restore_best();
            return pack_result(Status::NumericalLimit, iter);
        }

        const double mu = (s.dot(z) + tau * kappa) / degree;

        VecD xc, zc;
        kkt_solve(-prob.c, prob.h, xc, zc);
        const double dtau_denom = prob.c.dot(xc) + prob.h.dot(zc) - kappa / tau;

        auto direction = [&](const std::vector<MatD>& v_comp, double v_kappa, double eta, VecD& dx,
                             VecD& dz, VecD& ds, double& dtau, double& dkappa) {
            const VecD bx = -(1.0 - eta) * rx;
            VecD wt_lv(L.total);
            for (size_t b = 0; b < nblocks; ++b) {
                const int m = prob.sides[b];
                const MatD lv = jordan_solve(W.lambda_eig[b], v_comp[b]);
                wt_lv.segment(L.offset[b], svec_dim(m)) = svec(apply_wt(b, lv));
            }
            const VecD bz = -(1.0 - eta) * rz - wt_lv;

            VecD xr, zr;
            kkt_solve(bx, bz, xr, zr);
            const double btau = -(1.0 - eta) * rtau;
            dtau = (btau - v_kappa / tau - prob.c.dot(xr) - prob.h.dot(zr)) / dtau_denom;
            dx = xr + dtau * xc;
            dz = zr + dtau * zc;
            // ds from the primal residual equation directly, so the rz update
            // stays exact even when the scaling is ill-conditioned.
            ds = -(1.0 - eta) * rz - prob.G * dx + prob.h * dtau;
            dkappa = (v_kappa - kappa * dtau) / tau;
        };

        auto step_bound = [&](const VecD& ds, const VecD& dz, double dtau, double dkappa) {
            double t = 0.0;
            for (size_t b = 0; b < nblocks; ++b) {
                const int m = prob.sides[b];
                const MatD ds_scaled = apply_winv_t(b, smat(seg(ds, L, b, m), m));
                const MatD dz_scaled = apply_w(b, smat(seg(dz, L, b, m), m));
                t = std::max(t, blocking_rate(W.lambda_eig[b], ds_scaled));
                t = std::max(t, blocking_rate(W.lambda_eig[b], dz_scaled));
            }
            if (dtau < 0) t = std::max(t, -dtau / tau);
            if (dkappa < 0) t = std::max(t, -dkappa / kappa);
            return t;
        };

        // Predictor.
        std::vector<MatD> v_aff(nblocks);
        for (size_t b = 0; b < nblocks; ++b) v_aff[b] = -W.lambda_mat[b] * W.lambda_mat[b];
        VecD dxa, dza, dsa;
        double dtaua, dkappaa;
        direction(v_aff, -tau * kappa, 0.0, dxa, dza, dsa, dtaua, dkappaa);

        const double ta = step_bound(dsa, dza, dtaua, dkappaa);
        const double alpha_aff = std::min(1.0, ta > 0 ? 1.0 / ta : 1e100);
        const double gap_aff = (s + alpha_aff * dsa).dot(z + alpha_aff * dza) +
                               (tau + alpha_aff * dtaua) * (kappa + alpha_aff * dkappaa);
        const double sigma =
            std::pow(std::max(0.0, std::min(1.0, gap_aff / (s.dot(z) + tau * kappa))), 3.0);

        // Corrector with the Mehrotra second-order term.
        std::vector<MatD> v_comb(nblocks);
        for (size_t b = 0; b < nblocks; ++b) {
            const int m = prob.sides[b];
            const MatD ds_scaled = apply_winv_t(b, smat(seg(dsa, L, b, m), m));
            const MatD dz_scaled = apply_w(b, smat(seg(dza, L, b, m), m));
            v_comb[b] = -W.lambda_mat[b] * W.lambda_mat[b] + sigma * mu * MatD::Identity(m, m) -
                        jordan_product(ds_scaled, dz_scaled);
        }
        const double v_kappa = -tau * kappa + sigma * mu - dtaua * dkappaa;

        VecD dx, dz, ds;
        double dtau, dkappa;
        direction(v_comb, v_kappa, sigma, dx, dz, ds, dtau, dkappa);

        double tc = step_bound(ds, dz, dtau, dkappa);
        double alpha = std::min(1.0, kStepDamping / std::max(tc, 1e-100));
        if (alpha < 1e-7) {
            // Blocked combined step; retry as a pure centering step without the
            // second-order term.
            for (size_t b = 0; b < nblocks; ++b) {
                const int m = prob.sides[b];
                v_comb[b] = -W.lambda_mat[b] * W.lambda_mat[b] + mu * MatD::Identity(m, m);
            }
            direction(v_comb, -tau * kappa + mu, 1.0, dx, dz, ds, dtau, dkappa);
            tc = step_bound(ds, dz, dtau, dkappa);
            alpha = std::min(1.0, kStepDamping / std::max(tc, 1e-100));
        }
        if (opts.verbose)
            std::fprintf(stderr, "      sigma %.3e  alpha_aff %.3e  alpha %.3e\n", sigma,
                         alpha_aff, alpha);
        if (!(alpha > 1e-7)) {
            restore_best();
            return pack_result(Status::NumericalLimit, iter);
        }

        x += alpha * dx;
        s += alpha * ds;
        z += alpha * dz;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if (!(tau > 0) || !(kappa > 0) || !std::isfinite(tau)) {
            restore_best();
            return pack_result(Status::NumericalLimit, iter);
        }
    }
    restore_best();
    return pack_result(Status::NumericalLimit, opts.max_iters);
}

}  // namespace metroq::conelp
