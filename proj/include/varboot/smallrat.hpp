#pragma once

#include <cstdint>
#include <numeric>
#include <string>

namespace vb {

// Small exact rational used for homotopy-parameter exponents. These stay
// tiny (half-integers in practice), so int64 components are plenty.
struct Rat64 {
    int64_t num = 0;
    int64_t den = 1;

    constexpr Rat64() = default;
    Rat64(int64_t n) : num(n), den(1) {}
    Rat64(int64_t n, int64_t d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        if (num == 0) den = 1;
    }

    bool is_zero() const { return num == 0; }
    bool is_integer() const { return den == 1; }

    friend Rat64 operator+(Rat64 a, Rat64 b) { return Rat64(a.num * b.den + b.num * a.den, a.den * b.den); }
    friend Rat64 operator-(Rat64 a, Rat64 b) { return Rat64(a.num * b.den - b.num * a.den, a.den * b.den); }
    friend Rat64 operator*(Rat64 a, Rat64 b) { return Rat64(a.num * b.num, a.den * b.den); }
    friend Rat64 operator*(int64_t a, Rat64 b) { return Rat64(a * b.num, b.den); }
    Rat64 operator-() const {
        Rat64 r;
        r.num = -num;
        r.den = den;
        return r;
    }

    friend bool operator==(const Rat64& a, const Rat64& b) { return a.num == b.num && a.den == b.den; }
    friend bool operator!=(const Rat64& a, const Rat64& b) { return !(a == b); }
    friend bool operator<(const Rat64& a, const Rat64& b) { return a.num * b.den < b.num * a.den; }
    friend bool operator>(const Rat64& a, const Rat64& b) { return b < a; }
    friend bool operator<=(const Rat64& a, const Rat64& b) { return !(b < a); }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }
};

} // namespace vb
