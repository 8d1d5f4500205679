#pragma once

#include <string>
#include <string_view>

namespace fprom {

enum class TransformKind { identity, log_x, log_x_log_t };

/// Variable change applied to data before modelling: x -> log x and,
/// for log_x_log_t, also t -> log t. Log transforms need positive inputs.
struct TransformSpec {
    TransformKind kind = TransformKind::identity;

    bool is_identity() const noexcept { return kind == TransformKind::identity; }
    bool transforms_time() const noexcept { return kind == TransformKind::log_x_log_t; }

    /// Throw Error(input) on non-positive arguments to a log.
    double forward_x(double x) const;
    double forward_t(double t) const;
    double inverse_x(double y) const;
    double inverse_t(double s) const;

    friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

std::string to_string(TransformKind kind);
TransformKind parse_transform(std::string_view name);

}  // namespace fprom
