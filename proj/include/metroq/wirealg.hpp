#pragma once

#include <algorithm>
#include <vector>

#include "metroq/common.hpp"

namespace metroq {

// Reserved ids for symbolic wires; numeric wires 1..2N stay below these, so
// canonical (ascending-id) order puts future/control/ancilla wires last.
inline constexpr int kFutureWire = 9000;
inline constexpr int kControlWire = 9100;
inline constexpr int kAncillaWireBase = 9300;

struct WireLabel {
    int id = 0;
    int dim = 1;

    friend bool operator==(const WireLabel& a, const WireLabel& b) {
        return a.id == b.id && a.dim == b.dim;
    }
};

using WireList = std::vector<WireLabel>;

namespace detail {

inline long long total_dim(const WireList& wires) {
    long long d = 1;
    for (const auto& w : wires) d *= w.dim;
    return d;
}

// Row-major strides: the first wire is the most significant index.
inline std::vector<long long> strides(const WireList& wires) {
    std::vector<long long> s(wires.size());
    long long acc = 1;
    for (int k = static_cast<int>(wires.size()) - 1; k >= 0; --k) {
        s[static_cast<size_t>(k)] = acc;
        acc *= wires[static_cast<size_t>(k)].dim;
    }
    return s;
}

inline void check_wires(const WireList& wires) {
    for (size_t i = 0; i < wires.size(); ++i) {
        require(wires[i].dim >= 1, "wire dim must be >= 1");
        for (size_t j = i + 1; j < wires.size(); ++j)
            require(wires[i].id != wires[j].id, "duplicate wire id " + std::to_string(wires[i].id));
    }
}

inline int find_wire(const WireList& wires, int id) {
    for (size_t k = 0; k < wires.size(); ++k)
        if (wires[k].id == id) return static_cast<int>(k);
    return -1;
}

}  // namespace detail

// A vector carried on an ordered list of labeled wire spaces.
class LabeledVector {
  public:
    LabeledVector() = default;
    LabeledVector(WireList wires, VecC data) : wires_(std::move(wires)), data_(std::move(data)) {
        detail::check_wires(wires_);
        require(data_.size() == detail::total_dim(wires_), "vector size mismatch with wire dims");
    }

    const WireList& wires() const { return wires_; }
    const VecC& data() const { return data_; }
    VecC& data() { return data_; }
    long long dim() const { return data_.size(); }

    LabeledVector permuted(const std::vector<int>& id_order) const;
    LabeledVector canonical() const;

    // Projects onto <j| over the given wires (j a flat row-major index over
    // them, in the listed order); the result keeps the remaining wires.
    LabeledVector slice(const std::vector<int>& ids, long long j) const;

    // Contracts sum_i <i|_a <i|_b (an unnormalized Bell bra on the wire pair).
    LabeledVector contract_pair(int id_a, int id_b) const;

  private:
    WireList wires_;
    VecC data_;
};

// A complex square matrix carried on an ordered list of labeled wire spaces.
class LabeledOperator {
  public:
    LabeledOperator() = default;
    LabeledOperator(WireList wires, MatC data) : wires_(std::move(wires)), data_(std::move(data)) {
        detail::check_wires(wires_);
        const long long d = detail::total_dim(wires_);
        require(data_.rows() == d && data_.cols() == d, "matrix side mismatch with wire dims");
    }

    static LabeledOperator identity(const WireList& wires) {
        const long long d = detail::total_dim(wires);
        return LabeledOperator(wires, MatC::Identity(d, d));
    }

    const WireList& wires() const { return wires_; }
    const MatC& data() const { return data_; }
    MatC& data() { return data_; }
    long long dim() const { return data_.rows(); }
    cxd trace() const { return data_.trace(); }

    bool has_wire(int id) const { return detail::find_wire(wires_, id) >= 0; }
    WireLabel wire(int id) const {
        const int k = detail::find_wire(wires_, id);
        require(k >= 0, "unknown wire id " + std::to_string(id));
        return wires_[static_cast<size_t>(k)];
    }

    LabeledOperator permuted(const std::vector<int>& id_order) const;
    LabeledOperator canonical() const;

    LabeledOperator partial_trace(const std::vector<int>& over) const;
    LabeledOperator partial_transpose(const std::vector<int>& over) const;

    // Tensors with identity wires and permutes so the result carries exactly
    // `target` (which must contain all current wires).
    LabeledOperator expand_to(const WireList& target) const;

  private:
    WireList wires_;
    MatC data_;
};

LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b);
LabeledVector tensor(const LabeledVector& a, const LabeledVector& b);

// Link product A*B = Tr_{overlap}[(1 ⊗ A^{T_overlap})(B ⊗ 1)], the composition
// rule for CJ operators; reduces to tensor when the label sets are disjoint.
LabeledOperator link(const LabeledOperator& a, const LabeledOperator& b);

inline LabeledOperator outer(const LabeledVector& v) {
    return LabeledOperator(v.wires(), v.data() * v.data().adjoint());
}

// Minimal-rank purification: returns |v> on wires(x) + future wire such that
// Tr_future |v><v| = x. The future wire dim equals the numerical rank of x.
LabeledVector purify(const LabeledOperator& x, WireLabel future);

// Dense Hermitian helpers shared by the whole artifact.
struct HermEig {
    VecD values;   // ascending
    MatC vectors;  // columns
};
HermEig herm_eig(const MatC& x);
MatC sqrt_psd(const MatC& x);
MatC pinv_sqrt(const MatC& x);
int numerical_rank(const MatC& x);

}  // namespace metroq
