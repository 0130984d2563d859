#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace kam {

/// Integer Fourier index k in Z^n.
class WaveVector {
public:
    WaveVector() = default;
    explicit WaveVector(std::vector<int> components);
    WaveVector(std::initializer_list<int> components);

    int dim() const { return static_cast<int>(k_.size()); }
    int operator[](std::size_t i) const { return k_[i]; }
    std::span<const int> components() const { return k_; }

    /// 1-norm, used for every cutoff.
    int l1() const;
    /// Squared Euclidean norm.
    long l2sq() const;
    double l2() const;

    bool is_zero() const;
    /// k != 0 and its first non-null component is positive.
    bool is_sharp() const;
    /// sharp and gcd of the components is 1.
    bool is_star() const;

    double dot(std::span<const double> y) const;
    WaveVector operator-() const;
    WaveVector scaled(int j) const;

    std::string str() const;

    auto operator<=>(const WaveVector&) const = default;
    bool operator==(const WaveVector&) const = default;

private:
    std::vector<int> k_;
};

/// k = multiple * base with base a star vector.
struct CanonicalClass {
    WaveVector base;
    int multiple = 0;
};

/// Throws std::invalid_argument on the zero vector.
CanonicalClass canonical_class(const WaveVector& k);

/// Number of vectors in Z^n with 1-norm exactly m.
std::uint64_t count_vectors_l1(int n, int m);

/// Upper bound on the number of sharp vectors with 0 < |k| <= max_l1.
std::uint64_t count_sharp_upto(int n, int max_l1);

/// Sharp vectors with min_l1 <= |k| <= max_l1, ordered by 1-norm then lexicographically.
std::vector<WaveVector> sharp_vectors(int n, int max_l1, int min_l1 = 1);

/// Star vectors with min_l1 <= |k| <= max_l1, same ordering as sharp_vectors.
std::vector<WaveVector> star_vectors(int n, int max_l1, int min_l1 = 1);

} // namespace kam
