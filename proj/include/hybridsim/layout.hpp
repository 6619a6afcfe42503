#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hybridsim/errors.hpp"

namespace hybridsim {

inline constexpr std::size_t kDefaultCapacity = 4'000'000;

/// Index layout of the hybrid space (qubits x truncated Fock modes).
///
/// index = (((s * (L0+1) + n0) * (L1+1) + n1) * ...), spin index major, then
/// modes in ascending position. Qubit 0 is the most significant spin bit.
/// `mode_labels[k]` is the physical mode id stored at position k, which lets a
/// sub-simulation hold e.g. modes {0,1,3} only.
class Layout {
public:
    Layout() = default;

    Layout(int n_qubits, std::vector<int> cutoffs, std::vector<int> mode_labels = {},
           std::size_t capacity = kDefaultCapacity)
        : n_qubits_(n_qubits), cutoffs_(std::move(cutoffs)), labels_(std::move(mode_labels)) {
        if (n_qubits_ < 0 || n_qubits_ > 40) throw ValidationError("layout: bad qubit count");
        if (labels_.empty())
            for (std::size_t k = 0; k < cutoffs_.size(); ++k) labels_.push_back(static_cast<int>(k));
        if (labels_.size() != cutoffs_.size())
            throw ValidationError("layout: mode labels and cutoffs differ in length");
        for (std::size_t k = 0; k < labels_.size(); ++k) {
            if (cutoffs_[k] < 0) throw ValidationError("layout: negative cutoff");
            for (std::size_t l = 0; l < k; ++l)
                if (labels_[l] == labels_[k]) throw ValidationError("layout: duplicate mode label");
        }
        // overflow-safe capacity check
        long double dim = static_cast<long double>(std::uint64_t{1} << n_qubits_);
        for (int c : cutoffs_) dim *= (c + 1);
        if (dim > static_cast<long double>(capacity))
            throw CapacityError("state dimension " + std::to_string(static_cast<double>(dim)) +
                                " exceeds capacity " + std::to_string(capacity));
        fock_dim_ = 1;
        mode_strides_.assign(cutoffs_.size(), 1);
        for (std::size_t k = cutoffs_.size(); k-- > 0;) {
            mode_strides_[k] = fock_dim_;
            fock_dim_ *= static_cast<std::size_t>(cutoffs_[k] + 1);
        }
        spin_dim_ = std::size_t{1} << n_qubits_;
    }

    [[nodiscard]] int n_qubits() const { return n_qubits_; }
    [[nodiscard]] std::size_t n_modes() const { return cutoffs_.size(); }
    [[nodiscard]] const std::vector<int>& cutoffs() const { return cutoffs_; }
    [[nodiscard]] const std::vector<int>& mode_labels() const { return labels_; }
    [[nodiscard]] std::size_t spin_dim() const { return spin_dim_; }
    [[nodiscard]] std::size_t fock_dim() const { return fock_dim_; }
    [[nodiscard]] std::size_t dim() const { return spin_dim_ * fock_dim_; }

    [[nodiscard]] std::size_t qubit_stride(int q) const {
        check_qubit(q);
        return fock_dim_ << (n_qubits_ - 1 - q);
    }
    [[nodiscard]] std::size_t mode_stride(std::size_t pos) const { return mode_strides_.at(pos); }

    /// Position of a physical mode label; throws if absent.
    [[nodiscard]] std::size_t mode_position(int label) const {
        for (std::size_t k = 0; k < labels_.size(); ++k)
            if (labels_[k] == label) return k;
        throw ValidationError("mode " + std::to_string(label) + " not present in layout");
    }
    [[nodiscard]] bool has_mode(int label) const {
        for (int l : labels_)
            if (l == label) return true;
        return false;
    }
    [[nodiscard]] int cutoff_of(int label) const { return cutoffs_[mode_position(label)]; }

    void check_qubit(int q) const {
        if (q < 0 || q >= n_qubits_)
            throw ValidationError("qubit " + std::to_string(q) + " out of range");
    }

    [[nodiscard]] std::size_t encode(std::size_t spin, const std::vector<int>& occupations) const {
        if (spin >= spin_dim_ || occupations.size() != cutoffs_.size())
            throw ValidationError("layout: encode arguments out of range");
        std::size_t idx = spin;
        for (std::size_t k = 0; k < cutoffs_.size(); ++k) {
            if (occupations[k] < 0 || occupations[k] > cutoffs_[k])
                throw ValidationError("layout: occupation out of range");
            idx = idx * static_cast<std::size_t>(cutoffs_[k] + 1) + static_cast<std::size_t>(occupations[k]);
        }
        return idx;
    }

    struct Decoded {
        std::size_t spin = 0;
        std::vector<int> occupations;
    };

    [[nodiscard]] Decoded decode(std::size_t index) const {
        Decoded d;
        d.occupations.assign(cutoffs_.size(), 0);
        for (std::size_t k = cutoffs_.size(); k-- > 0;) {
            const auto base = static_cast<std::size_t>(cutoffs_[k] + 1);
            d.occupations[k] = static_cast<int>(index % base);
            index /= base;
        }
        d.spin = index;
        return d;
    }

    [[nodiscard]] int occupation(std::size_t index, std::size_t pos) const {
        return static_cast<int>((index / mode_strides_[pos]) % static_cast<std::size_t>(cutoffs_[pos] + 1));
    }
    [[nodiscard]] std::size_t spin_of(std::size_t index) const { return index / fock_dim_; }

    friend bool operator==(const Layout& a, const Layout& b) {
        return a.n_qubits_ == b.n_qubits_ && a.cutoffs_ == b.cutoffs_ && a.labels_ == b.labels_;
    }

private:
    int n_qubits_ = 0;
    std::vector<int> cutoffs_;
    std::vector<int> labels_;
    std::vector<std::size_t> mode_strides_;
    std::size_t fock_dim_ = 1;
    std::size_t spin_dim_ = 1;
};

}  // namespace hybridsim
