#include "metroq/wirealg.hpp"

#include <numeric>

namespace metroq {

namespace {

using detail::find_wire;
using detail::strides;
using detail::total_dim;

// Decomposes flat index -> per-wire digits (row-major).
void unflatten(long long idx, const WireList& wires, std::vector<int>& digits) {
    digits.resize(wires.size());
    for (int k = static_cast<int>(wires.size()) - 1; k >= 0; --k) {
        const int d = wires[static_cast<size_t>(k)].dim;
        digits[static_cast<size_t>(k)] = static_cast<int>(idx % d);
        idx /= d;
    }
}

// Maps source flat indices to destination flat indices for a wire reordering.
std::vector<long long> reorder_map(const WireList& src, const std::vector<int>& id_order) {
    require(id_order.size() == src.size(), "permutation must list every wire id exactly once");
    WireList dst;
    std::vector<int> src_pos;
    for (int id : id_order) {
        const int k = find_wire(src, id);
        require(k >= 0, "unknown wire id " + std::to_string(id));
        dst.push_back(src[static_cast<size_t>(k)]);
        src_pos.push_back(k);
    }
    detail::check_wires(dst);

    const auto dst_strides = strides(dst);
    const long long n = total_dim(src);
    std::vector<long long> map(static_cast<size_t>(n));
    std::vector<int> digits;
    for (long long i = 0; i < n; ++i) {
        unflatten(i, src, digits);
        long long j = 0;
        for (size_t k = 0; k < dst.size(); ++k)
            j += dst_strides[k] * digits[static_cast<size_t>(src_pos[k])];
        map[static_cast<size_t>(i)] = j;
    }
    return map;
}

std::vector<int> ascending_ids(const WireList& wires) {
    std::vector<int> ids;
    for (const auto& w : wires) ids.push_back(w.id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace

LabeledVector LabeledVector::permuted(const std::vector<int>& id_order) const {
    const auto map = reorder_map(wires_, id_order);
    WireList dst;
    for (int id : id_order) dst.push_back(wires_[static_cast<size_t>(find_wire(wires_, id))]);
    VecC out(data_.size());
    for (long long i = 0; i < data_.size(); ++i) out(map[static_cast<size_t>(i)]) = data_(i);
    return LabeledVector(std::move(dst), std::move(out));
}

LabeledVector LabeledVector::canonical() const { return permuted(ascending_ids(wires_)); }

LabeledVector LabeledVector::slice(const std::vector<int>& ids, long long j) const {
    WireList kept, cut;
    std::vector<int> order;
    for (int id : ids) {
        const int k = find_wire(wires_, id);
        require(k >= 0, "unknown wire id " + std::to_string(id));
        cut.push_back(wires_[static_cast<size_t>(k)]);
        order.push_back(id);
    }
    for (const auto& w : wires_)
        if (std::find(ids.begin(), ids.end(), w.id) == ids.end()) {
            kept.push_back(w);
            order.push_back(w.id);
        }
    const LabeledVector arranged = permuted(order);  // cut wires first, then kept
    const long long nk = total_dim(kept);
    require(j >= 0 && j < total_dim(cut), "slice index out of range");
    VecC out = arranged.data().segment(j * nk, nk);
    return LabeledVector(kept, std::move(out));
}

LabeledVector LabeledVector::contract_pair(int id_a, int id_b) const {
    const int ka = find_wire(wires_, id_a);
    const int kb = find_wire(wires_, id_b);
    require(ka >= 0 && kb >= 0, "unknown wire id in pair contraction");
    const int d = wires_[static_cast<size_t>(ka)].dim;
    require(d == wires_[static_cast<size_t>(kb)].dim, "pair contraction needs equal dims");

    std::vector<int> order = {id_a, id_b};
    WireList kept;
    for (const auto& w : wires_)
        if (w.id != id_a && w.id != id_b) {
            kept.push_back(w);
            order.push_back(w.id);
        }
    const LabeledVector arranged = permuted(order);
    const long long nk = total_dim(kept);
    VecC out = VecC::Zero(nk);
    for (int i = 0; i < d; ++i)
        out += arranged.data().segment((static_cast<long long>(i) * d + i) * nk, nk);
    return LabeledVector(kept, std::move(out));
}

LabeledOperator LabeledOperator::permuted(const std::vector<int>& id_order) const {
    const auto map = reorder_map(wires_, id_order);
    WireList dst;
    for (int id : id_order) dst.push_back(wires_[static_cast<size_t>(find_wire(wires_, id))]);
    const long long n = data_.rows();
    MatC out(n, n);
    for (long long i = 0; i < n; ++i)
        for (long long j = 0; j < n; ++j)
            out(map[static_cast<size_t>(i)], map[static_cast<size_t>(j)]) = data_(i, j);
    return LabeledOperator(std::move(dst), std::move(out));
}

LabeledOperator LabeledOperator::canonical() const { return permuted(ascending_ids(wires_)); }

LabeledOperator LabeledOperator::partial_trace(const std::vector<int>& over) const {
    std::vector<int> order;
    WireList kept, cut;
    for (int id : over) {
        const int k = find_wire(wires_, id);
        require(k >= 0, "unknown wire id " + std::to_string(id));
        cut.push_back(wires_[static_cast<size_t>(k)]);
    }
    for (const auto& w : wires_)
        if (std::find(over.begin(), over.end(), w.id) == over.end()) kept.push_back(w);
    // Arrange cut wires first for contiguous summation.
    for (const auto& w : cut) order.push_back(w.id);
    for (const auto& w : kept) order.push_back(w.id);
    const LabeledOperator arranged = permuted(order);

    const long long nc = total_dim(cut);
    const long long nk = total_dim(kept);
    MatC out = MatC::Zero(nk, nk);
    for (long long t = 0; t < nc; ++t)
        out += arranged.data().block(t * nk, t * nk, nk, nk);
    return LabeledOperator(kept, std::move(out));
}

LabeledOperator LabeledOperator::partial_transpose(const std::vector<int>& over) const {
    for (int id : over)
        require(find_wire(wires_, id) >= 0, "unknown wire id " + std::to_string(id));
    if (over.empty()) return *this;

    std::vector<int> order;
    WireList cut, kept;
    for (const auto& w : wires_) {
        if (std::find(over.begin(), over.end(), w.id) != over.end())
            cut.push_back(w);
        else
            kept.push_back(w);
    }
    for (const auto& w : cut) order.push_back(w.id);
    for (const auto& w : kept) order.push_back(w.id);
    const LabeledOperator arranged = permuted(order);

    const long long nc = total_dim(cut);
    const long long nk = total_dim(kept);
    MatC out(nc * nk, nc * nk);
    for (long long a = 0; a < nc; ++a)
        for (long long b = 0; b < nc; ++b)
            out.block(b * nk, a * nk, nk, nk) = arranged.data().block(a * nk, b * nk, nk, nk);
    LabeledOperator res(arranged.wires(), std::move(out));
    // Restore the original wire order.
    std::vector<int> orig;
    for (const auto& w : wires_) orig.push_back(w.id);
    return res.permuted(orig);
}

LabeledOperator LabeledOperator::expand_to(const WireList& target) const {
    WireList missing;
    for (const auto& w : target)
        if (!has_wire(w.id)) missing.push_back(w);
    for (const auto& w : wires_) {
        const int k = find_wire(target, w.id);
        require(k >= 0 && target[static_cast<size_t>(k)].dim == w.dim,
                "expand_to target must contain every current wire");
    }
    LabeledOperator big = missing.empty() ? *this : tensor(*this, LabeledOperator::identity(missing));
    std::vector<int> order;
    for (const auto& w : target) order.push_back(w.id);
    return big.permuted(order);
}

LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b) {
    for (const auto& w : b.wires())
        require(!a.has_wire(w.id), "label collision on wire " + std::to_string(w.id));
    WireList wires = a.wires();
    wires.insert(wires.end(), b.wires().begin(), b.wires().end());
    const long long na = a.dim(), nb = b.dim();
    MatC out(na * nb, na * nb);
    for (long long i = 0; i < na; ++i)
        for (long long j = 0; j < na; ++j)
            out.block(i * nb, j * nb, nb, nb) = a.data()(i, j) * b.data();
    return LabeledOperator(std::move(wires), std::move(out));
}

LabeledVector tensor(const LabeledVector& a, const LabeledVector& b) {
    for (const auto& w : b.wires())
        require(detail::find_wire(a.wires(), w.id) < 0,
                "label collision on wire " + std::to_string(w.id));
    WireList wires = a.wires();
    wires.insert(wires.end(), b.wires().begin(), b.wires().end());
    const long long na = a.dim(), nb = b.dim();
    VecC out(na * nb);
    for (long long i = 0; i < na; ++i) out.segment(i * nb, nb) = a.data()(i) * b.data();
    return LabeledVector(std::move(wires), std::move(out));
}

LabeledOperator link(const LabeledOperator& a, const LabeledOperator& b) {
    std::vector<int> overlap;
    for (const auto& w : a.wires())
        if (b.has_wire(w.id)) {
            require(b.wire(w.id).dim == w.dim,
                    "dimension mismatch on shared wire " + std::to_string(w.id));
            overlap.push_back(w.id);
        }
    if (overlap.empty()) return tensor(a, b).canonical();

    WireList all = a.wires();
    for (const auto& w : b.wires())
        if (!a.has_wire(w.id)) all.push_back(w);
    std::sort(all.begin(), all.end(), [](const WireLabel& x, const WireLabel& y) { return x.id < y.id; });

    const LabeledOperator lhs = a.partial_transpose(overlap).expand_to(all);
    const LabeledOperator rhs = b.expand_to(all);
    LabeledOperator prod(all, lhs.data() * rhs.data());
    return prod.partial_trace(overlap);
}

HermEig herm_eig(const MatC& x) {
    require(is_hermitian(x), "herm_eig requires a Hermitian matrix");
    Eigen::SelfAdjointEigenSolver<MatC> es(hermitize(x));
    require(es.info() == Eigen::Success, "eigendecomposition failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

int numerical_rank(const MatC& x) {
    const HermEig e = herm_eig(x);
    const double top = e.values.size() ? e.values.cwiseAbs().maxCoeff() : 0.0;
    int r = 0;
    for (int i = 0; i < e.values.size(); ++i)
        if (e.values(i) > kRankCutoff * top) ++r;
    return r;
}

MatC sqrt_psd(const MatC& x) {
    const HermEig e = herm_eig(x);
    const double top = e.values.size() ? e.values.cwiseAbs().maxCoeff() : 0.0;
    VecD s = VecD::Zero(e.values.size());
    for (int i = 0; i < e.values.size(); ++i)
        if (e.values(i) > kRankCutoff * top) s(i) = std::sqrt(e.values(i));
    return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

MatC pinv_sqrt(const MatC& x) {
    const HermEig e = herm_eig(x);
    const double top = e.values.size() ? e.values.cwiseAbs().maxCoeff() : 0.0;
    VecD s = VecD::Zero(e.values.size());
    for (int i = 0; i < e.values.size(); ++i)
        if (e.values(i) > kRankCutoff * top) s(i) = 1.0 / std::sqrt(e.values(i));
    return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

LabeledVector purify(const LabeledOperator& x, WireLabel future) {
    require(!x.has_wire(future.id), "future wire id collides with an existing wire");
    const MatC& m = x.data();
    require(is_hermitian(m, 1e-9), "purify requires a Hermitian operator");
    const HermEig e = herm_eig(m);
    const double top = std::max(e.values.cwiseAbs().maxCoeff(), 0.0);
    require(e.values.minCoeff() >= -1e-10 * std::max(top, 1.0), "purify requires a PSD operator");

    std::vector<int> keep;
    for (int i = e.values.size() - 1; i >= 0; --i)
        if (e.values(i) > kRankCutoff * top) keep.push_back(i);
    const int rank = std::max<int>(1, static_cast<int>(keep.size()));
    require(future.dim <= 1 || future.dim >= rank,
            "future wire dim smaller than the numerical rank");
    future.dim = rank;

    const long long n = x.dim();
    VecC v = VecC::Zero(n * rank);
    for (int k = 0; k < static_cast<int>(keep.size()); ++k) {
        const double lam = e.values(keep[static_cast<size_t>(k)]);
        const VecC col = e.vectors.col(keep[static_cast<size_t>(k)]);
        for (long long i = 0; i < n; ++i) v(i * rank + k) = std::sqrt(lam) * col(i);
    }
    WireList wires = x.wires();
    wires.push_back(future);
    return LabeledVector(std::move(wires), std::move(v));
}

}  // namespace metroq
