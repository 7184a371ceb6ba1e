#ifndef EIGENINFER_REPORT_HPP
#define EIGENINFER_REPORT_HPP

#include <nlohmann/json.hpp>
#include <string>

#include "eigeninfer/inference.hpp"

namespace eigeninfer {

inline nlohmann::json theta_to_json(const ThetaVector& th) {
    nlohmann::json j;
    j["masses"] = th.masses;
    j["eigenvalues"] = th.eigenvalues;
    return j;
}

/// JSON document {kind, theta, statistic, dof, p_value, decision,
/// diagnostics} for a hypothesis-test result.
inline nlohmann::json report_to_json(const TestReport& rep,
                                     const ThetaVector* theta = nullptr) {
    nlohmann::json j;
    j["kind"] = rep.kind;
    if (theta) j["theta"] = theta_to_json(*theta);
    j["statistic"] = rep.statistic;
    j["dof"] = rep.dof;
    j["p_value"] = rep.p_value;
    j["decision"] = rep.reject ? "reject" : "accept";
    j["diagnostics"] = {{"threshold", rep.threshold}, {"notes", rep.notes}};
    return j;
}

/// Same document shape for an estimation result; decision is always
/// "estimate" and the chi-square fields describe the attained objective.
inline nlohmann::json report_to_json(const EstimateReport& rep) {
    nlohmann::json j;
    j["kind"] = "estimate";
    j["theta"] = theta_to_json(rep.theta_hat);
    j["statistic"] = rep.objective;
    j["dof"] = rep.q;
    j["p_value"] = nullptr;
    j["decision"] = "estimate";
    j["diagnostics"] = {{"restarts", rep.restarts},
                        {"iterations", rep.iterations},
                        {"converged", rep.converged},
                        {"notes", rep.notes}};
    return j;
}

}  // namespace eigeninfer

#endif
