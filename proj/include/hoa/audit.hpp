#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace hoa {

struct AuditCheck {
    std::string name;
    bool pass = true;
    int checked = 0;
    int violations = 0;
    int first_violation = -1; ///< k of the first failing row
    double worst = 0.0;       ///< largest violation amount (0 when passing)
};

struct AuditReport {
    std::vector<AuditCheck> checks;
    bool pass() const
    {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    const AuditCheck* find(const std::string& name) const
    {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

struct CheckBuilder {
    AuditCheck c;
    explicit CheckBuilder(std::string name) { c.name = std::move(name); }
    /// Records lhs <= rhs + tol.
    void leq(int k, double lhs, double rhs, double tol)
    {
        ++c.checked;
        const double excess = lhs - rhs - tol;
        if (!(excess <= 0.0)) {
            ++c.violations;
            if (c.first_violation < 0) c.first_violation = k;
            c.worst = std::max(c.worst, std::isfinite(excess) ? excess : std::numeric_limits<double>::infinity());
            c.pass = false;
        }
    }
};

} // namespace detail

} // namespace hoa
