#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "metroq/wirealg.hpp"

namespace metroq {

// Parametrized channel family: Kraus operators K_i(phi) with analytic
// derivatives. Channels act as rho -> sum_i K_i rho K_i^dag.
struct ParamChannel {
    int d_in = 2;
    int d_out = 2;
    int s = 0;  // Kraus rank (number of Kraus operators carried)
    std::function<std::vector<MatC>(double)> kraus;
    std::function<std::vector<MatC>(double)> dkraus;
    std::string family;
    double p = 0.0, g_tau = 0.0, t = 1.0;
    std::uint64_t seed = 0;
};

// Choi data of N identical queries: the columns of N_vec are the vectorized
// Kraus products |N_i1..iN> = |E_i1> x ... x |E_iN>, and dN_vec their
// phi-derivatives by the product rule. Wire 2k-1 is channel k's input.
struct ChoiFamily {
    int N = 1;
    int d_in = 2, d_out = 2;
    int s = 0;
    int r = 0;  // s^N columns
    double phi = 0.0;
    WireList wires;       // 1..2N
    MatC N_vec, dN_vec;   // (d_in*d_out)^N rows x r columns
    std::vector<MatC> kraus, dkraus;  // single-channel operators at phi

    LabeledOperator choi_single() const;      // wires (1,2)
    LabeledOperator choi_n() const;           // N_vec N_vec^dag on wires 1..2N
    LabeledOperator choi_n_derivative() const;
};

ParamChannel make_ad_channel(double p, double t);
ParamChannel make_swap_channel(double g_tau, double t);
ParamChannel sample_bruzda_channel(int rank, std::uint64_t seed, double t = 1.0);
// User-supplied noise Kraus set, composed after the phase rotation.
ParamChannel make_kraus_channel(std::vector<MatC> noise_kraus, double t);

ChoiFamily choi_power(const ParamChannel& ch, int N, double phi);

// CPTP defect  || sum_i K_i^dag K_i - 1 ||_max  at a given phi.
double cptp_defect(const ParamChannel& ch, double phi);
// Max relative mismatch between dkraus and a central finite difference.
double derivative_defect(const ParamChannel& ch, double phi, double step = 1e-6);

// Vectorization |K>> on an (input, output) wire pair: component (n, m) = K(m, n).
VecC vectorize_kraus(const MatC& k);

// Channel configuration (JSON): family, parameters, phi.
struct ChannelSpec {
    std::string family = "ad";
    double p = 0.5;
    double g_tau = 1.0;
    double t = 1.0;
    double phi = 1.0;
    std::uint64_t seed = 1;
    std::vector<MatC> kraus;  // used by family == "kraus"
};

ChannelSpec parse_channel_json(const std::string& text);
std::string channel_json(const ChannelSpec& spec);
ParamChannel build_channel(const ChannelSpec& spec);

}  // namespace metroq
