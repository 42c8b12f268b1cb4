#include "sage/metrics.hpp"

#include <stdexcept>

namespace sage {

namespace {

void validate_metric_inputs(const MetricInputs& in) {
    const Eigen::Index T = in.attack_response.rows();
    const Eigen::Index p = in.reference_output.size();
    const Eigen::Index q = in.in_control.cols();
    if (p < 1 || q < 1 || T < 1) throw std::invalid_argument("metrics: empty inputs");
    if (in.attack_response.cols() != p)
        throw std::invalid_argument("metrics: response/reference width mismatch");
    if (in.attack_inputs.rows() != in.in_control.rows() || in.attack_inputs.cols() != q)
        throw std::invalid_argument("metrics: input trajectory shape mismatch");
    if (in.sigma_u.size() != q || in.sigma_y.size() != p)
        throw std::invalid_argument("metrics: std vector size mismatch");
    if (!(in.sigma_u.minCoeff() > 0) || !(in.sigma_y.minCoeff() > 0))
        throw std::invalid_argument("metrics: in-control stds must be positive");
}

}  // namespace

double attack_effectivity(const MetricInputs& inputs) {
    validate_metric_inputs(inputs);
    const Eigen::Index T = inputs.attack_response.rows();
    double dev = 0.0;
    for (Eigen::Index t = 0; t < T; ++t)
        dev += (inputs.reference_output.transpose() - inputs.attack_response.row(t))
                   .cwiseAbs()
                   .sum();
    return (dev / static_cast<double>(T)) / inputs.sigma_y.mean();
}

double average_perturbation(const MetricInputs& inputs) {
    validate_metric_inputs(inputs);
    const Eigen::Index T = inputs.in_control.rows();
    const double dev =
        (inputs.in_control - inputs.attack_inputs).cwiseAbs().sum() / static_cast<double>(T);
    return dev / inputs.sigma_u.sum();
}

double attack_cost_metric(const MetricInputs& inputs) {
    validate_metric_inputs(inputs);
    AttackProblem p;
    p.in_control = inputs.in_control;
    p.cost = inputs.cost;
    p.cost.mode = CostSpec::Mode::indicator;
    return cost_term(p, inputs.attack_inputs);
}

}  // namespace sage
