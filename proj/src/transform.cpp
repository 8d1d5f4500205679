#include "fprom/transform.hpp"

#include <cmath>

#include "fprom/error.hpp"

namespace fprom {

namespace {

double checked_log(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw_input(std::string("log transform needs a positive finite ") + what + ", got " +
                    std::to_string(v));
    }
    return std::log(v);
}

}  // namespace

double TransformSpec::forward_x(double x) const {
    return is_identity() ? x : checked_log(x, "value");
}

double TransformSpec::forward_t(double t) const {
    return transforms_time() ? checked_log(t, "time") : t;
}

double TransformSpec::inverse_x(double y) const { return is_identity() ? y : std::exp(y); }

double TransformSpec::inverse_t(double s) const { return transforms_time() ? std::exp(s) : s; }

std::string to_string(TransformKind kind) {
    switch (kind) {
        case TransformKind::identity: return "identity";
        case TransformKind::log_x: return "log_x";
        case TransformKind::log_x_log_t: return "log_x_log_t";
    }
    return "identity";
}

TransformKind parse_transform(std::string_view name) {
    if (name == "identity") return TransformKind::identity;
    if (name == "log_x") return TransformKind::log_x;
    if (name == "log_x_log_t") return TransformKind::log_x_log_t;
    throw_input("unknown transform '" + std::string(name) + "'");
}

}  // namespace fprom
