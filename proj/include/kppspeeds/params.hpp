#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "errors.hpp"
#include "specfun.hpp"

namespace kppspeeds {

enum class Exterior { Kpp, Mortality };

/// Model constants. For a mortality exterior, fp is ignored and rho holds the
/// death rate.
struct Params {
    int N = 2;
    double D = 1.0;
    double d = 1.0;
    double gp = 1.0;
    double fp = 1.0;
    double rho = 0.0;
    double mu = 1.0;
    double nu = 1.0;
    double R = 1.0;
    double S = 1.0;
    Exterior exterior = Exterior::Kpp;

    Order order() const { return Order::of_dimension(N); }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError(std::string("parameter ") + name + " must be positive and finite");
        };
        if (N < 2) throw DomainError("parameter N must be at least 2");
        positive(D, "D");
        positive(d, "d");
        positive(gp, "gp");
        positive(mu, "mu");
        positive(nu, "nu");
        positive(R, "R");
        positive(S, "S");
        if (exterior == Exterior::Kpp) positive(fp, "fp");
        else positive(rho, "rho");
    }

    friend bool operator==(const Params&, const Params&) = default;
};

enum class Regime { Fisher, Interior, Anomalous };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::Fisher: return "FISHER";
        case Regime::Interior: return "INTERIOR";
        case Regime::Anomalous: return "ANOMALOUS";
    }
    return "?";
}

struct Witness {
    double beta;
    double alpha;
};

struct Diagnostics {
    int iterations = 0;
    double residual = 0.0;
    std::string note;
};

struct SpeedResult {
    double c = 0.0;
    Regime regime = Regime::Fisher;
    std::optional<Witness> witness;
    Diagnostics diag;
};

/// Logistic reaction slope*s*(1 - s/capacity).
struct Logistic {
    double slope = 1.0;
    double capacity = 1.0;
    double operator()(double s) const { return slope * s * (1.0 - s / capacity); }
};

/// Linear death term -rho*s.
struct Mortality {
    double rho = 1.0;
    double operator()(double s) const { return -rho * s; }
};

}  // namespace kppspeeds
