#include "clustrand/error.hpp"
#include "clustrand/estimators.hpp"

#include <functional>
#include <map>

namespace clustrand {

namespace {

using T = Term;

struct Entry {
    Family family;
    Adjustment adjustment;
    std::vector<Term> covariates;
    // nullopt: take the caller's pi source
    std::optional<WeightSource> weights;
    bool recommended = false;
    bool not_recommended = false;
};

const std::map<std::string, Entry>& table() {
    static const std::map<std::string, Entry> entries = {
        {"tau_i", {Family::individual, Adjustment::none, {}, WeightSource::none}},
        {"tau_i_adj", {Family::individual, Adjustment::lin, {T::unit_x}, WeightSource::none}},
        {"tau_i_adj_xbar", {Family::individual, Adjustment::lin, {T::cluster_mean_x}, WeightSource::none}},
        {"tau_i_ancova", {Family::individual, Adjustment::ancova, {T::unit_x}, WeightSource::none, false, true}},
        {"tau_t", {Family::cluster_total, Adjustment::none, {}, WeightSource::none}},
        {"tau_t_adj_n", {Family::cluster_total, Adjustment::lin, {T::size}, WeightSource::none}},
        {"tau_t_adj_nx",
         {Family::cluster_total, Adjustment::lin, {T::size, T::scaled_total_x, T::cluster_c}, WeightSource::none, true}},
        {"tau_t_adj_xbar", {Family::cluster_total, Adjustment::lin, {T::cluster_mean_x}, WeightSource::none}},
        {"tau_t_adj_xtilde", {Family::cluster_total, Adjustment::lin, {T::scaled_total_x}, WeightSource::none}},
        {"tau_t_ancova",
         {Family::cluster_total, Adjustment::ancova, {T::size, T::scaled_total_x, T::cluster_c}, WeightSource::none,
          false, true}},
        {"tau_a", {Family::wls_average, Adjustment::none, {}, WeightSource::uniform}},
        {"tau_a_adj", {Family::wls_average, Adjustment::lin, {T::cluster_mean_x, T::cluster_c}, WeightSource::uniform}},
        {"tau_aw", {Family::wls_average, Adjustment::none, {}, WeightSource::omega}},
        {"tau_aw_adj", {Family::wls_average, Adjustment::lin, {T::cluster_mean_x, T::cluster_c}, WeightSource::omega}},
        {"tau_api", {Family::wls_average, Adjustment::none, {}, std::nullopt}},
        {"tau_api_adj", {Family::wls_average, Adjustment::lin, {T::cluster_mean_x, T::cluster_c}, std::nullopt}},
        {"tau_pia", {Family::weighted_average_ols, Adjustment::none, {}, std::nullopt}},
        {"tau_pia_adj",
         {Family::weighted_average_ols, Adjustment::lin, {T::weight, T::weight_mean_x, T::weight_c}, std::nullopt,
          true}},
    };
    return entries;
}

}  // namespace

EstimatorSpec make_estimator(const std::string& name, WeightSource pi_source) {
    const auto& t = table();
    const auto it = t.find(name);
    if (it == t.end()) throw ValidationError("unknown estimator '" + name + "'");
    const Entry& e = it->second;
    EstimatorSpec s;
    s.label = name;
    s.family = e.family;
    s.adjustment = e.adjustment;
    s.covariates = e.covariates;
    s.weights = e.weights.value_or(pi_source);
    s.recommended = e.recommended;
    s.not_recommended = e.not_recommended;
    return s;
}

std::vector<std::string> registry_names() {
    std::vector<std::string> names;
    for (const auto& [name, entry] : table()) names.push_back(name);
    return names;
}

}  // namespace clustrand
