#include "metroq/channels.hpp"

#include <random>

#include <json.hpp>

namespace metroq {

namespace {

MatC u_z(double phi, double t) {
    MatC u = MatC::Zero(2, 2);
    u(0, 0) = std::exp(cxd(0, -phi * t / 2));
    u(1, 1) = std::exp(cxd(0, phi * t / 2));
    return u;
}

MatC u_z_dot(double phi, double t) {
    // d/dphi e^{-i phi t sigma_z / 2}
    MatC g = MatC::Zero(2, 2);
    g(0, 0) = cxd(0, -t / 2);
    g(1, 1) = cxd(0, t / 2);
    return g * u_z(phi, t);
}

// Noise Kraus set composed after the phase rotation: K_i(phi) = M_i U_z(phi).
ParamChannel compose_with_rotation(std::vector<MatC> noise, double t) {
    ParamChannel ch;
    ch.d_out = static_cast<int>(noise[0].rows());
    ch.d_in = static_cast<int>(noise[0].cols());
    require(ch.d_in == 2, "phase encoding U_z(phi) needs a qubit input");
    ch.s = static_cast<int>(noise.size());
    ch.t = t;
    ch.kraus = [noise, t](double phi) {
        std::vector<MatC> out;
        out.reserve(noise.size());
        const MatC u = u_z(phi, t);
        for (const auto& m : noise) out.push_back(m * u);
        return out;
    };
    ch.dkraus = [noise, t](double phi) {
        std::vector<MatC> out;
        out.reserve(noise.size());
        const MatC du = u_z_dot(phi, t);
        for (const auto& m : noise) out.push_back(m * du);
        return out;
    };
    return ch;
}

void validate_channel(const ParamChannel& ch) {
    for (double phi : {0.3, 1.1}) {
        require(cptp_defect(ch, phi) <= 1e-10, "channel is not CPTP");
        require(derivative_defect(ch, phi) <= 1e-5, "analytic Kraus derivative mismatch");
    }
}

}  // namespace

double cptp_defect(const ParamChannel& ch, double phi) {
    MatC acc = MatC::Zero(ch.d_in, ch.d_in);
    for (const MatC& k : ch.kraus(phi)) acc += k.adjoint() * k;
    return max_abs(MatC(acc - MatC::Identity(ch.d_in, ch.d_in)));
}

double derivative_defect(const ParamChannel& ch, double phi, double step) {
    const auto kp = ch.kraus(phi + step);
    const auto km = ch.kraus(phi - step);
    const auto dk = ch.dkraus(phi);
    double worst = 0.0;
    double scale = 0.0;
    for (size_t i = 0; i < dk.size(); ++i) scale = std::max(scale, max_abs(dk[i]));
    scale = std::max(scale, 1e-3);
    for (size_t i = 0; i < dk.size(); ++i) {
        const MatC fd = (kp[i] - km[i]) / (2 * step);
        worst = std::max(worst, max_abs(MatC(fd - dk[i])) / scale);
    }
    return worst;
}

VecC vectorize_kraus(const MatC& k) {
    const int dout = static_cast<int>(k.rows());
    const int din = static_cast<int>(k.cols());
    VecC v(din * dout);
    for (int n = 0; n < din; ++n)
        for (int m = 0; m < dout; ++m) v(n * dout + m) = k(m, n);
    return v;
}

ParamChannel make_ad_channel(double p, double t) {
    require(p >= 0.0 && p <= 1.0, "decay parameter p must lie in [0, 1]");
    MatC k1 = MatC::Zero(2, 2), k2 = MatC::Zero(2, 2);
    k1(0, 0) = 1.0;
    k1(1, 1) = std::sqrt(1.0 - p);
    k2(0, 1) = std::sqrt(p);
    ParamChannel ch = compose_with_rotation({k1, k2}, t);
    ch.family = "ad";
    ch.p = p;
    validate_channel(ch);
    return ch;
}

ParamChannel make_swap_channel(double g_tau, double t) {
    MatC k1 = MatC::Zero(2, 2), k2 = MatC::Zero(2, 2);
    k1(0, 0) = std::exp(cxd(0, -g_tau));
    k1(1, 1) = std::cos(g_tau);
    k2(0, 1) = cxd(0, -std::sin(g_tau));
    ParamChannel ch = compose_with_rotation({k1, k2}, t);
    ch.family = "swap";
    ch.g_tau = g_tau;
    validate_channel(ch);
    return ch;
}

ParamChannel sample_bruzda_channel(int rank, std::uint64_t seed, double t) {
    require(rank == 2, "only rank-2 qubit channels are sampled");
    const int d = 2;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);

    for (int attempt = 0; attempt < 64; ++attempt) {
        MatC gin(d * d, rank);
        for (int i = 0; i < d * d; ++i)
            for (int j = 0; j < rank; ++j) gin(i, j) = cxd(g(rng), g(rng));
        const MatC w = gin * gin.adjoint();  // on (out, in) index pairs

        MatC y = MatC::Zero(d, d);  // Tr_out W
        for (int n = 0; n < d; ++n)
            for (int np = 0; np < d; ++np)
                for (int m = 0; m < d; ++m) y(n, np) += w(m * d + n, m * d + np);
        const HermEig ye = herm_eig(y);
        if (ye.values.minCoeff() < 1e-8 * ye.values.maxCoeff()) continue;

        const MatC yfix = pinv_sqrt(y);
        MatC scale = MatC::Zero(d * d, d * d);  // 1_out (x) Y^{-1/2}
        for (int m = 0; m < d; ++m) scale.block(m * d, m * d, d, d) = yfix;
        const MatC choi = scale * w * scale;

        const HermEig ce = herm_eig(choi);
        std::vector<MatC> noise;
        for (int k = ce.values.size() - 1; k >= 0; --k) {
            if (ce.values(k) <= kRankCutoff * ce.values.maxCoeff()) break;
            MatC kr(d, d);
            for (int m = 0; m < d; ++m)
                for (int n = 0; n < d; ++n) kr(m, n) = std::sqrt(ce.values(k)) * ce.vectors(m * d + n, k);
            noise.push_back(kr);
        }
        if (static_cast<int>(noise.size()) != rank) continue;

        ParamChannel ch = compose_with_rotation(noise, t);
        ch.family = "bruzda";
        ch.seed = seed;
        validate_channel(ch);
        return ch;
    }
    fail("bruzda sampling failed to produce a full-rank environment");
}

ParamChannel make_kraus_channel(std::vector<MatC> noise_kraus, double t) {
    require(!noise_kraus.empty(), "empty Kraus list");
    ParamChannel ch = compose_with_rotation(std::move(noise_kraus), t);
    ch.family = "kraus";
    validate_channel(ch);
    return ch;
}

LabeledOperator ChoiFamily::choi_single() const {
    MatC e = MatC::Zero(d_in * d_out, d_in * d_out);
    for (const MatC& k : kraus) {
        const VecC v = vectorize_kraus(k);
        e += v * v.adjoint();
    }
    return LabeledOperator({{1, d_in}, {2, d_out}}, e);
}

LabeledOperator ChoiFamily::choi_n() const {
    return LabeledOperator(wires, MatC(N_vec * N_vec.adjoint()));
}

LabeledOperator ChoiFamily::choi_n_derivative() const {
    return LabeledOperator(wires, MatC(dN_vec * N_vec.adjoint() + N_vec * dN_vec.adjoint()));
}

ChoiFamily choi_power(const ParamChannel& ch, int N, double phi) {
    require(N >= 1, "need at least one query");
    ChoiFamily f;
    f.N = N;
    f.d_in = ch.d_in;
    f.d_out = ch.d_out;
    f.s = ch.s;
    f.phi = phi;
    f.kraus = ch.kraus(phi);
    f.dkraus = ch.dkraus(phi);
    for (int k = 1; k <= N; ++k) {
        f.wires.push_back({2 * k - 1, ch.d_in});
        f.wires.push_back({2 * k, ch.d_out});
    }

    std::vector<VecC> e(f.kraus.size()), de(f.kraus.size());
    for (size_t i = 0; i < f.kraus.size(); ++i) {
        e[i] = vectorize_kraus(f.kraus[i]);
        de[i] = vectorize_kraus(f.dkraus[i]);
    }

    long long r = 1;
    for (int k = 0; k < N; ++k) r *= ch.s;
    f.r = static_cast<int>(r);
    const long long dim = static_cast<long long>(std::pow(ch.d_in * ch.d_out, N));
    f.N_vec = MatC::Zero(dim, r);
    f.dN_vec = MatC::Zero(dim, r);

    std::vector<int> idx(static_cast<size_t>(N));
    for (long long col = 0; col < r; ++col) {
        long long rem = col;
        for (int k = N - 1; k >= 0; --k) {
            idx[static_cast<size_t>(k)] = static_cast<int>(rem % ch.s);
            rem /= ch.s;
        }
        VecC acc = VecC::Ones(1);
        for (int k = 0; k < N; ++k) {
            const VecC& factor = e[static_cast<size_t>(idx[static_cast<size_t>(k)])];
            VecC next(acc.size() * factor.size());
            for (long long a = 0; a < acc.size(); ++a)
                next.segment(a * factor.size(), factor.size()) = acc(a) * factor;
            acc = std::move(next);
        }
        f.N_vec.col(col) = acc;

        VecC dacc = VecC::Zero(dim);
        for (int j = 0; j < N; ++j) {
            VecC term = VecC::Ones(1);
            for (int k = 0; k < N; ++k) {
                const VecC& factor =
                    (k == j) ? de[static_cast<size_t>(idx[static_cast<size_t>(k)])]
                             : e[static_cast<size_t>(idx[static_cast<size_t>(k)])];
                VecC next(term.size() * factor.size());
                for (long long a = 0; a < term.size(); ++a)
                    next.segment(a * factor.size(), factor.size()) = term(a) * factor;
                term = std::move(next);
            }
            dacc += term;
        }
        f.dN_vec.col(col) = dacc;
    }
    return f;
}

ChannelSpec parse_channel_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        fail(std::string("channel config: invalid JSON: ") + e.what());
    }
    ChannelSpec spec;
    require(j.contains("family"), "channel config: missing field 'family'");
    require(j["family"].is_string(), "channel config: field 'family' must be a string");
    spec.family = j["family"].get<std::string>();
    auto get_num = [&](const char* key, double& out) {
        if (!j.contains(key)) return;
        require(j[key].is_number(), std::string("channel config: field '") + key + "' must be a number");
        out = j[key].get<double>();
    };
    get_num("p", spec.p);
    get_num("g_tau", spec.g_tau);
    get_num("t", spec.t);
    get_num("phi", spec.phi);
    if (j.contains("seed")) {
        require(j["seed"].is_number_unsigned(),
                "channel config: field 'seed' must be a nonnegative integer");
        spec.seed = j["seed"].get<std::uint64_t>();
    }
    if (spec.family == "kraus") {
        require(j.contains("kraus"), "channel config: missing field 'kraus'");
        require(j["kraus"].is_array() && !j["kraus"].empty(),
                "channel config: field 'kraus' must be a nonempty array");
        for (const auto& jk : j["kraus"]) {
            require(jk.is_array() && !jk.empty(), "channel config: field 'kraus' entries must be matrices");
            const size_t rows = jk.size();
            const size_t cols = jk[0].size();
            MatC k(rows, cols);
            for (size_t a = 0; a < rows; ++a) {
                require(jk[a].is_array() && jk[a].size() == cols,
                        "channel config: field 'kraus' rows must have equal length");
                for (size_t b = 0; b < cols; ++b) {
                    const auto& cell = jk[a][b];
                    require(cell.is_array() && cell.size() == 2,
                            "channel config: field 'kraus' entries must be [re, im] pairs");
                    k(static_cast<long long>(a), static_cast<long long>(b)) =
                        cxd(cell[0].get<double>(), cell[1].get<double>());
                }
            }
            spec.kraus.push_back(std::move(k));
        }
    }
    return spec;
}

std::string channel_json(const ChannelSpec& spec) {
    nlohmann::json j;
    j["family"] = spec.family;
    j["t"] = spec.t;
    j["phi"] = spec.phi;
    if (spec.family == "ad") j["p"] = spec.p;
    if (spec.family == "swap") j["g_tau"] = spec.g_tau;
    if (spec.family == "bruzda") j["seed"] = spec.seed;
    if (spec.family == "kraus") {
        nlohmann::json arr = nlohmann::json::array();
        for (const MatC& k : spec.kraus) {
            nlohmann::json jm = nlohmann::json::array();
            for (int a = 0; a < k.rows(); ++a) {
                nlohmann::json row = nlohmann::json::array();
                for (int b = 0; b < k.cols(); ++b)
                    row.push_back({k(a, b).real(), k(a, b).imag()});
                jm.push_back(row);
            }
            arr.push_back(jm);
        }
        j["kraus"] = arr;
    }
    return j.dump();
}

ParamChannel build_channel(const ChannelSpec& spec) {
    if (spec.family == "ad") return make_ad_channel(spec.p, spec.t);
    if (spec.family == "swap") return make_swap_channel(spec.g_tau, spec.t);
    if (spec.family == "bruzda") return sample_bruzda_channel(2, spec.seed, spec.t);
    if (spec.family == "kraus") return make_kraus_channel(spec.kraus, spec.t);
    fail("channel config: unknown family '" + spec.family + "'");
}

}  // namespace metroq
