// SPDX-License-Identifier: Apache-2.0
#include "cmcl/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "cmcl/errors.hpp"

namespace cmcl {

namespace {

std::string num(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string opt_text(const std::optional<double>& v) { return v ? num(*v) : "na"; }

}  // namespace

EvalReport evaluate(const Ensemble& ensemble, const Dataset& data, std::size_t histogram_bins,
                    double specialization_threshold) {
  data.validate();
  if (data.dim() != ensemble.input_dim) throw ShapeError("dataset dimension mismatch");
  if (data.classes > ensemble.classes) throw ShapeError("dataset has more classes than the model");

  const auto traces = forward_ensemble(ensemble, data.features, nullptr, true);
  std::vector<Matrix> dists;
  for (const auto& t : traces) dists.push_back(t.output());
  const auto preds = member_predictions(dists);

  EvalReport r;
  r.dataset = data.name;
  r.examples = data.size();
  r.members = ensemble.size();
  r.classes = ensemble.classes;
  r.specialization_threshold = specialization_threshold;
  r.top1_error = top1_error(dists, data.labels);
  r.oracle_error = oracle_error(preds, data.labels);
  r.mean_entropy = mean_entropy(dists);
  r.classwise = classwise_accuracy(preds, data.labels, ensemble.classes);

  std::vector<double> all_entropies;
  double spec_sum = 0.0, non_sum = 0.0;
  std::size_t spec_n = 0, non_n = 0;
  for (std::size_t m = 0; m < r.members; ++m) {
    MemberReport mr;
    mr.error = member_error(preds[m], data.labels);
    mr.specialized_classes = r.classwise.specialized_classes(m, specialization_threshold);
    std::vector<bool> is_spec(ensemble.classes, false);
    for (auto c : mr.specialized_classes) is_spec[c] = true;
    double s = 0.0, n = 0.0;
    std::size_t sn = 0, nn = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double h = predictive_entropy(dists[m].row(i));
      mr.entropies.push_back(h);
      all_entropies.push_back(h);
      if (is_spec[data.labels[i]]) {
        s += h;
        ++sn;
      } else {
        n += h;
        ++nn;
      }
    }
    if (sn > 0) mr.entropy_specialized = s / static_cast<double>(sn);
    if (nn > 0) mr.entropy_non_specialized = n / static_cast<double>(nn);
    spec_sum += s;
    non_sum += n;
    spec_n += sn;
    non_n += nn;
    r.member.push_back(std::move(mr));
  }
  if (spec_n > 0) r.entropy_specialized = spec_sum / static_cast<double>(spec_n);
  if (non_n > 0) r.entropy_non_specialized = non_sum / static_cast<double>(non_n);
  const double upper = ensemble.classes > 1 ? std::log(static_cast<double>(ensemble.classes)) : 1.0;
  r.histogram = entropy_histogram(all_entropies, histogram_bins, 0.0, upper);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["dataset"] = dataset;
  j["examples"] = examples;
  j["members"] = members;
  j["classes"] = classes;
  j["top1_error"] = top1_error;
  j["oracle_error"] = oracle_error;
  j["mean_entropy"] = mean_entropy;
  j["specialization_threshold"] = specialization_threshold;
  j["entropy_specialized"] = opt_json(entropy_specialized);
  j["entropy_non_specialized"] = opt_json(entropy_non_specialized);
  j["class_counts"] = classwise.class_counts;
  auto& ms = j["member_reports"] = nlohmann::json::array();
  for (std::size_t m = 0; m < member.size(); ++m) {
    nlohmann::json mj;
    mj["member"] = m;
    mj["error"] = member[m].error;
    auto acc = nlohmann::json::array();
    for (std::size_t c = 0; c < classes; ++c) acc.push_back(opt_json(classwise(m, c)));
    mj["classwise_accuracy"] = acc;
    mj["specialized_classes"] = member[m].specialized_classes;
    mj["entropy_specialized"] = opt_json(member[m].entropy_specialized);
    mj["entropy_non_specialized"] = opt_json(member[m].entropy_non_specialized);
    ms.push_back(std::move(mj));
  }
  auto& hj = j["entropy_histogram"];
  hj["lower"] = histogram.lower;
  hj["upper"] = histogram.upper;
  hj["counts"] = histogram.counts;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "dataset = " << dataset << '\n'
      << "examples = " << examples << '\n'
      << "members = " << members << '\n'
      << "classes = " << classes << '\n'
      << "top1_error = " << num(top1_error) << '\n'
      << "oracle_error = " << num(oracle_error) << '\n'
      << "mean_entropy = " << num(mean_entropy) << '\n'
      << "entropy_specialized = " << opt_text(entropy_specialized) << '\n'
      << "entropy_non_specialized = " << opt_text(entropy_non_specialized) << '\n';
  for (std::size_t m = 0; m < member.size(); ++m) {
    const std::string p = "member." + std::to_string(m) + ".";
    out << p << "error = " << num(member[m].error) << '\n';
    out << p << "classwise_accuracy =";
    for (std::size_t c = 0; c < classes; ++c) out << ' ' << opt_text(classwise(m, c));
    out << '\n' << p << "specialized_classes =";
    for (auto c : member[m].specialized_classes) out << ' ' << c;
    out << '\n';
  }
  return out.str();
}

std::string EvalReport::histogram_csv() const {
  std::ostringstream out;
  out << "bin_center,count\n";
  for (std::size_t k = 0; k < histogram.counts.size(); ++k) {
    out << num(histogram.bin_center(k)) << ',' << histogram.counts[k] << '\n';
  }
  return out.str();
}

}  // namespace cmcl
