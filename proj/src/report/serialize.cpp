#include "ffsense/report/serialize.hpp"

#include "ffsense/error.hpp"

namespace ffsense::report {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw DomainError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DomainError(std::string("field '") + key + "' has the wrong type");
  }
}

const json& array_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_array())
    throw DomainError(std::string("missing array field '") + key + "'");
  return j.at(key);
}

}  // namespace

json to_json(const metrics::ClassificationReport& r) {
  json classes = json::array();
  for (const auto& c : r.per_class)
    classes.push_back({{"label", c.label},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"f1", c.f1},
                       {"support", c.support},
                       {"precision_zero_division", c.precision_zero_division},
                       {"recall_zero_division", c.recall_zero_division}});
  return {{"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"averaging", r.averaging == metrics::Averaging::macro ? "macro" : "weighted"},
          {"total", r.total},
          {"correct", r.correct},
          {"zero_division", r.zero_division()},
          {"per_class", classes}};
}

metrics::ClassificationReport classification_from_json(const json& j) {
  metrics::ClassificationReport r;
  r.accuracy = field<double>(j, "accuracy");
  r.precision = field<double>(j, "precision");
  r.recall = field<double>(j, "recall");
  r.f1 = field<double>(j, "f1");
  r.averaging = field<std::string>(j, "averaging") == "weighted" ? metrics::Averaging::weighted
                                                                 : metrics::Averaging::macro;
  r.total = field<std::int64_t>(j, "total");
  r.correct = field<std::int64_t>(j, "correct");
  for (const auto& c : array_field(j, "per_class"))
    r.per_class.push_back({field<std::string>(c, "label"), field<double>(c, "precision"), field<double>(c, "recall"),
                           field<double>(c, "f1"), field<std::int64_t>(c, "support"),
                           field<bool>(c, "precision_zero_division"), field<bool>(c, "recall_zero_division")});
  return r;
}

json to_json(const metrics::RegressionReport& r) { return {{"r2", r.r2}, {"mae", r.mae}, {"mse", r.mse}}; }

metrics::RegressionReport regression_from_json(const json& j) {
  return {field<double>(j, "r2"), field<double>(j, "mae"), field<double>(j, "mse")};
}

json to_json(const metrics::FilterDistortionReport& r) {
  json rows = json::array();
  json breaking = json::array();
  for (const auto& row : r.rows) {
    rows.push_back(
        {{"filter_id", row.filter_id}, {"mean_d", row.mean_d}, {"n_pairs", row.n_pairs}, {"breaking", row.breaking}});
    if (row.breaking) breaking.push_back(row.filter_id);
  }
  return {{"threshold", r.threshold}, {"rows", rows}, {"breaking", breaking}};
}

metrics::FilterDistortionReport distortion_from_json(const json& j) {
  metrics::FilterDistortionReport r;
  r.threshold = field<double>(j, "threshold");
  for (const auto& row : array_field(j, "rows"))
    r.rows.push_back({field<std::string>(row, "filter_id"), field<double>(row, "mean_d"),
                      field<std::int64_t>(row, "n_pairs"), field<bool>(row, "breaking")});
  return r;
}

json to_json(const metrics::AgeDeviationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"filter_id", row.filter_id},
                    {"defined", row.defined},
                    {"avg_reduction", row.avg_reduction},
                    {"avg_increment", row.avg_increment},
                    {"net_deviation", row.defined ? json(row.net_deviation) : json(nullptr)},
                    {"n_under", row.n_under},
                    {"n_over", row.n_over},
                    {"n_exact", row.n_exact}});
  return {{"rows", rows}};
}

metrics::AgeDeviationReport age_deviation_from_json(const json& j) {
  metrics::AgeDeviationReport r;
  for (const auto& row : array_field(j, "rows")) {
    metrics::AgeDeviationRow out;
    out.filter_id = field<std::string>(row, "filter_id");
    out.defined = field<bool>(row, "defined");
    out.avg_reduction = field<double>(row, "avg_reduction");
    out.avg_increment = field<double>(row, "avg_increment");
    out.net_deviation = out.defined ? field<double>(row, "net_deviation") : 0.0;
    out.n_under = field<std::int64_t>(row, "n_under");
    out.n_over = field<std::int64_t>(row, "n_over");
    out.n_exact = field<std::int64_t>(row, "n_exact");
    r.rows.push_back(std::move(out));
  }
  return r;
}

json to_json(const metrics::ConfusionMatrix& m) { return {{"classes", m.classes}, {"counts", m.counts}}; }

metrics::ConfusionMatrix confusion_from_json(const json& j) {
  metrics::ConfusionMatrix m;
  m.classes = field<std::vector<std::string>>(j, "classes");
  m.counts = field<std::vector<std::vector<std::int64_t>>>(j, "counts");
  if (m.counts.size() != m.classes.size()) throw DomainError("confusion matrix row count differs from class count");
  for (const auto& row : m.counts)
    if (row.size() != m.classes.size()) throw DomainError("confusion matrix is not square");
  return m;
}

json to_json(const metrics::MispredictionTable& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json counts = json::object();
    for (const auto& c : row.counts) counts[c.descriptor] = c.count;
    rows.push_back({{"filter_id", row.filter_id},
                    {"counts", counts},
                    {"order", [&] {
                       json o = json::array();
                       for (const auto& c : row.counts) o.push_back(c.descriptor);
                       return o;
                     }()},
                    {"total_errors", row.total_errors()},
                    {"confusion", to_json(row.confusion)}});
  }
  return {{"task", std::string(metrics::to_string(t.task))}, {"classes", t.classes}, {"rows", rows}};
}

metrics::MispredictionTable mispredictions_from_json(const json& j) {
  metrics::MispredictionTable t;
  const auto task = field<std::string>(j, "task");
  if (task != "gender" && task != "ethnicity") throw DomainError("unknown misprediction task '" + task + "'");
  t.task = task == "gender" ? metrics::Task::gender : metrics::Task::ethnicity;
  t.classes = field<std::vector<std::string>>(j, "classes");
  for (const auto& row : array_field(j, "rows")) {
    metrics::MispredictionRow out;
    out.filter_id = field<std::string>(row, "filter_id");
    const auto& counts = row.at("counts");
    for (const auto& d : field<std::vector<std::string>>(row, "order"))
      out.counts.push_back({d, field<std::int64_t>(counts, d.c_str())});
    out.confusion = confusion_from_json(row.at("confusion"));
    t.rows.push_back(std::move(out));
  }
  return t;
}

}  // namespace ffsense::report
