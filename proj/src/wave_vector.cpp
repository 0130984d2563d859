#include "kam/wave_vector.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace kam {

WaveVector::WaveVector(std::vector<int> components) : k_(std::move(components)) {}

WaveVector::WaveVector(std::initializer_list<int> components) : k_(components) {}

int WaveVector::l1() const {
    int s = 0;
    for (int c : k_) s += std::abs(c);
    return s;
}

long WaveVector::l2sq() const {
    long s = 0;
    for (int c : k_) s += static_cast<long>(c) * c;
    return s;
}

double WaveVector::l2() const { return std::sqrt(static_cast<double>(l2sq())); }

bool WaveVector::is_zero() const {
    for (int c : k_)
        if (c != 0) return false;
    return true;
}

bool WaveVector::is_sharp() const {
    for (int c : k_)
        if (c != 0) return c > 0;
    return false;
}

bool WaveVector::is_star() const {
    if (!is_sharp()) return false;
    int g = 0;
    for (int c : k_) g = std::gcd(g, c);
    return g == 1;
}

double WaveVector::dot(std::span<const double> y) const {
    if (y.size() != k_.size()) throw std::invalid_argument("WaveVector::dot: dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < k_.size(); ++i) s += k_[i] * y[i];
    return s;
}

WaveVector WaveVector::operator-() const { return scaled(-1); }

WaveVector WaveVector::scaled(int j) const {
    std::vector<int> out(k_);
    for (int& c : out) c *= j;
    return WaveVector(std::move(out));
}

std::string WaveVector::str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < k_.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(k_[i]);
    }
    return s + ")";
}

CanonicalClass canonical_class(const WaveVector& k) {
    if (k.is_zero()) throw std::invalid_argument("canonical_class: zero wave vector");
    int g = 0;
    for (int c : k.components()) g = std::gcd(g, c);
    if (!k.is_sharp()) g = -g;
    std::vector<int> base;
    base.reserve(k.dim());
    for (int c : k.components()) base.push_back(c / g);
    return {WaveVector(std::move(base)), g};
}

std::uint64_t count_vectors_l1(int n, int m) {
    if (m == 0) return 1;
    // sum over the number i of nonzero components: 2^i C(n,i) C(m-1,i-1)
    auto binom = [](int a, int b) -> std::uint64_t {
        if (b < 0 || b > a) return 0;
        std::uint64_t r = 1;
        for (int t = 1; t <= b; ++t) r = r * static_cast<std::uint64_t>(a - b + t) / t;
        return r;
    };
    std::uint64_t total = 0;
    for (int i = 1; i <= std::min(n, m); ++i) total += (std::uint64_t{1} << i) * binom(n, i) * binom(m - 1, i - 1);
    return total;
}

std::uint64_t count_sharp_upto(int n, int max_l1) {
    std::uint64_t total = 0;
    for (int m = 1; m <= max_l1; ++m) total += count_vectors_l1(n, m) / 2;
    return total;
}

namespace {

// All vectors of dimension n with 1-norm exactly m, lexicographic order.
void enumerate_l1(int n, int m, std::vector<int>& prefix, std::vector<WaveVector>& out) {
    const int depth = static_cast<int>(prefix.size());
    if (depth == n - 1) {
        if (m == 0) {
            prefix.push_back(0);
            out.emplace_back(prefix);
            prefix.pop_back();
        } else {
            for (int c : {-m, m}) {
                prefix.push_back(c);
                out.emplace_back(prefix);
                prefix.pop_back();
            }
        }
        return;
    }
    for (int c = -m; c <= m; ++c) {
        prefix.push_back(c);
        enumerate_l1(n, m - std::abs(c), prefix, out);
        prefix.pop_back();
    }
}

} // namespace

std::vector<WaveVector> sharp_vectors(int n, int max_l1, int min_l1) {
    if (n < 1) throw std::invalid_argument("sharp_vectors: dimension must be >= 1");
    std::vector<WaveVector> out;
    for (int m = std::max(1, min_l1); m <= max_l1; ++m) {
        std::vector<WaveVector> level;
        std::vector<int> prefix;
        enumerate_l1(n, m, prefix, level);
        for (auto& k : level)
            if (k.is_sharp()) out.push_back(std::move(k));
    }
    return out;
}

std::vector<WaveVector> star_vectors(int n, int max_l1, int min_l1) {
    auto sharp = sharp_vectors(n, max_l1, min_l1);
    std::vector<WaveVector> out;
    out.reserve(sharp.size());
    for (auto& k : sharp)
        if (k.is_star()) out.push_back(std::move(k));
    return out;
}

} // namespace kam
