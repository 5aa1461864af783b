#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "kme/bounds.hpp"
#include "kme/estimator.hpp"
#include "kme/lecam.hpp"

namespace kme {

using Json = nlohmann::ordered_json;

// Kernel spec: {"family": ..., "d": ..., family parameters}. Custom kernels
// list "atoms" as [t, mass], "gamma" as [shape, rate, weight] and "invgamma"
// as [shape, scale, weight].
RadialKernel kernel_from_json(const Json& spec);
Json kernel_to_json(const RadialKernel& k);

Json target_to_json(const Target& t);

// Non-finite doubles become null so that every document stays valid JSON.
Json number_or_null(double x);

Json to_json(const BoundReport& r);
Json to_json(const IntervalConstant& c);
Json to_json(const StrongConvexityEstimate& e);
Json to_json(const RateReport& r);
Json to_json(const HardFamily& f);
Json to_json(const ConditionReport& r);
Json to_json(const StressSummary& s);

// Rows "n,replicate,error,norm"; fields use 17 significant digits.
void write_errors_csv(std::ostream& os, const std::vector<RateReport>& reports);

}  // namespace kme
