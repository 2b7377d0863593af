#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "ffsense/dataset/image.hpp"
#include "ffsense/error.hpp"
#include "ffsense/io.hpp"
#include "ffsense/nn/loss.hpp"
#include "ffsense/random.hpp"

namespace ffsense::fixtures {

using dataset::Ethnicity;
using dataset::FilterCategory;
using dataset::Gender;
using dataset::SourceApp;

const std::vector<FilterTargets>& filter_study_targets() {
  static const std::vector<FilterTargets> targets{
      {"haircut", "Haircut Filter", SourceApp::FaceApp, FilterCategory::beautification, 0.458548, -2.062500, 1.478261,
       16, 1, 0, {0, 3, 6, 6}},
      {"child", "Child Filter", SourceApp::FaceApp, FilterCategory::distortion, 0.507977, -3.371795, 1.888889, 39, 4,
       0, {0, 10, 8, 3}},
      {"gender_reverse", "Gender Reverse Filter", SourceApp::FaceApp, FilterCategory::distortion, 0.580298, -3.492754,
       2.000000, 46, 1, 3, {0, 0, 2, 5}},
      {"hipster_beard", "Hipster Beard Style Filter", SourceApp::FaceApp, FilterCategory::occlusion, 0.332914,
       -2.530303, 1.812500, 33, 0, 0, {0, 8, 6, 5}},
      {"blonde", "Hair Color Blonde Filter", SourceApp::FaceApp, FilterCategory::beautification, 0.222967, -2.369863,
       1.636364, 36, 1, 0, {0, 3, 3, 6}},
      {"puppy", "Puppy Filter", SourceApp::B612, FilterCategory::occlusion, 0.494714, -3.200000, 1.800000, 25, 1, 1,
       {0, 15, 7, 2}},
      {"so_sad", "So Sad Filter", SourceApp::B612, FilterCategory::distortion, 0.191711, -2.142857, 1.733333, 21, 0, 0,
       {0, 6, 7, 1}},
      {"hipster_look", "Hipster Look Filter", SourceApp::Snapchat, FilterCategory::occlusion, 1.179643, -5.774194,
       2.166667, 31, 5, 2, {0, 3, 0, 29}},
      {"sparkling_cartoon", "Sparkling Cartoon Filter", SourceApp::Snapchat, FilterCategory::distortion, 0.615396,
       -3.208333, 3.153846, 24, 1, 0, {0, 5, 2, 7}},
      {"mellow_glow", "Body Mellow Glow Filter", SourceApp::Snapchat, FilterCategory::beautification, 0.427381,
       -2.716049, 1.200000, 40, 1, 0, {0, 3, 4, 6}},
  };
  return targets;
}

namespace {

constexpr int kSubjects = 102;
constexpr double kSpread = 0.05;
constexpr Ethnicity kColumnClass[4] = {Ethnicity::black, Ethnicity::east_asian, Ethnicity::west_asian,
                                       Ethnicity::white};
const char* const kPoses[] = {"neutral_front", "smiling_front", "neutral_left",  "neutral_right", "smiling_left",
                              "smiling_right", "neutral_up",    "neutral_down",  "surprised_front", "closed_eyes"};

// Values scattered around mean: +s, -s, +s, ... with a final exact value when
// n is odd, so the sample mean is the target.
double spread(double mean, int k, int n) {
  if (n % 2 == 1 && k == n - 1) return mean;
  return mean + (k % 2 == 0 ? kSpread : -kSpread);
}

std::vector<double> one_hot_mix(std::size_t n, std::size_t major, double major_p, double rest) {
  std::vector<double> p(n, rest);
  p[major] = major_p;
  return p;
}

}  // namespace

CannedStudy canned_filter_study() {
  const auto& targets = filter_study_targets();

  std::vector<Ethnicity> ethnicity;
  ethnicity.insert(ethnicity.end(), 45, Ethnicity::white);
  ethnicity.insert(ethnicity.end(), 20, Ethnicity::east_asian);
  ethnicity.insert(ethnicity.end(), 22, Ethnicity::west_asian);
  ethnicity.insert(ethnicity.end(), 15, Ethnicity::black);
  Rng rng(2023);
  for (std::size_t i = ethnicity.size(); i > 1; --i) std::swap(ethnicity[i - 1], ethnicity[rng.below(i)]);

  std::vector<dataset::SubjectRecord> subjects;
  for (int i = 0; i < kSubjects; ++i)
    subjects.push_back({fmt::format("s{:03d}", i + 1), 18 + (i * 7) % 45, i % 2 == 0 ? Gender::male : Gender::female,
                        ethnicity[i], nlohmann::json::object()});

  std::vector<dataset::FilterSpec> filters;
  for (const auto& t : targets)
    filters.push_back({t.filter_id, t.display_name, t.app, t.category, nlohmann::json::object()});

  std::vector<dataset::ImageRecord> images;
  for (const auto& s : subjects) {
    for (const char* pose : kPoses)
      images.push_back({s.subject_id + "_" + pose, s.subject_id, pose, std::string(dataset::kNoFilter),
                        "images/" + s.subject_id + "/" + pose + ".jpg", nlohmann::json::object()});
    for (const auto& f : filters)
      images.push_back({s.subject_id + "_" + f.filter_id, s.subject_id, std::string(dataset::kNeutralFront),
                        f.filter_id, "images/" + s.subject_id + "/" + f.filter_id + ".jpg", nlohmann::json::object()});
  }

  CannedStudy study{dataset::DatasetManifest(subjects, images, filters, {{"name", "canned filter study"}}), {}};

  // Per filter and subject: identity distance, age deviation, gender and
  // ethnicity predictions.
  struct Outcome {
    double distance = 0.0;
    double age_dev = 0.0;
    int gender = -1;     // predicted class index, -1 = correct
    int ethnicity = -1;
  };
  std::vector<std::vector<Outcome>> outcome(targets.size(), std::vector<Outcome>(kSubjects));
  for (std::size_t f = 0; f < targets.size(); ++f) {
    const auto& t = targets[f];
    auto& row = outcome[f];
    for (int s = 0; s < kSubjects; ++s) row[s].distance = spread(t.mean_distance, s, kSubjects);

    std::vector<int> order(kSubjects);
    for (int k = 0; k < kSubjects; ++k) order[k] = static_cast<int>((f * 11 + static_cast<std::size_t>(k)) % kSubjects);

    const int n = t.age_errors_each_way;
    for (int k = 0; k < n; ++k) {
      row[order[k]].age_dev = spread(t.avg_reduction, k, n);
      row[order[n + k]].age_dev = spread(t.avg_increment, k, n);
    }

    auto assign_gender = [&](Gender actual, int count) {
      for (int s : order) {
        if (count == 0) break;
        if (subjects[s].gender != actual) continue;
        row[s].gender = actual == Gender::male ? 1 : 0;
        --count;
      }
      if (count) throw DomainError("not enough subjects for gender target");
    };
    assign_gender(Gender::male, t.male_as_female);
    assign_gender(Gender::female, t.female_as_male);

    for (int c = 0; c < 4; ++c) {
      int count = t.predicted_as[c];
      for (int s : order) {
        if (count == 0) break;
        if (row[s].ethnicity >= 0 || subjects[s].ethnicity == kColumnClass[c]) continue;
        row[s].ethnicity = static_cast<int>(kColumnClass[c]);
        --count;
      }
      if (count) throw DomainError("not enough subjects for ethnicity target");
    }
  }

  auto record = [&](const dataset::SubjectRecord& subject, int s, const std::string& image_id,
                    const std::string& filter_id, const Outcome* o) {
    cli::PredictionRecord r;
    r.image_id = image_id;
    r.subject_id = subject.subject_id;
    r.filter_id = filter_id;
    r.identity_probs.assign(kSubjects, 0.0);
    if (!o) {
      r.identity_probs[s] = 1.0;
    } else {
      // Unit vector at angle theta from e_s, so ||e_s - q|| = distance.
      const double c = 1.0 - o->distance * o->distance / 2.0;
      const double sn = std::sqrt(1.0 - c * c);
      r.identity_probs[s] = c / (c + sn);
      r.identity_probs[(s + 1) % kSubjects] = sn / (c + sn);
    }
    r.predicted_identity = nn::argmax(r.identity_probs);
    r.age_pred = subject.age + (o ? o->age_dev : 0.0);
    const int g = o && o->gender >= 0 ? o->gender : static_cast<int>(subject.gender);
    r.gender_probs = one_hot_mix(2, static_cast<std::size_t>(g), 0.875, 0.125);
    const int e = o && o->ethnicity >= 0 ? o->ethnicity : static_cast<int>(subject.ethnicity);
    r.ethnicity_probs = one_hot_mix(4, static_cast<std::size_t>(e), 0.625, 0.125);
    return cli::DumpEntry{image_id, std::move(r), {}};
  };

  for (int s = 0; s < kSubjects; ++s) {
    const auto& subject = subjects[s];
    study.dump.push_back(record(subject, s, subject.subject_id + "_neutral_front", std::string(dataset::kNoFilter),
                                nullptr));
    for (std::size_t f = 0; f < targets.size(); ++f)
      study.dump.push_back(
          record(subject, s, subject.subject_id + "_" + targets[f].filter_id, targets[f].filter_id, &outcome[f][s]));
  }
  return study;
}

void write_canned_filter_study(const std::filesystem::path& dir) {
  const auto study = canned_filter_study();
  dataset::save_manifest(study.manifest, dir / "manifest.jsonl");
  cli::write_dump(study.dump, dir / "predictions.jsonl");
}

// ---------------------------------------------------------------------------
// Synthetic images

namespace {

struct Look {
  float color[3];
  float stripe_freq;
  bool vertical;
};

dataset::Image render_face(const Look& look, int size, int shift, float brightness, Rng& rng) {
  dataset::Image im{size, size, 3, std::vector<float>(static_cast<std::size_t>(size) * size * 3)};
  const float cx = size / 2.0f + shift, cy = size / 2.0f;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const float u = look.vertical ? static_cast<float>(x) : static_cast<float>(y);
      const float stripe = 0.5f + 0.5f * std::sin(look.stripe_freq * (u - shift));
      const float dx = (x - cx) / (size * 0.35f), dy = (y - cy) / (size * 0.45f);
      const bool face = dx * dx + dy * dy <= 1.0f;
      for (int c = 0; c < 3; ++c) {
        float v = face ? look.color[c] * (0.75f + 0.25f * stripe) : 0.1f + 0.1f * stripe;
        v = v * brightness + 0.02f * static_cast<float>(rng.normal());
        im.at(y, x, c) = std::clamp(v, 0.0f, 1.0f);
      }
    }
  }
  return im;
}

void apply_tint(dataset::Image& im) {
  const float tint[3] = {1.0f, 0.55f, 0.75f};
  for (int y = 0; y < im.height; ++y)
    for (int x = 0; x < im.width; ++x)
      for (int c = 0; c < 3; ++c) im.at(y, x, c) = 0.7f * im.at(y, x, c) + 0.3f * tint[c];
}

void apply_sticker(dataset::Image& im) {
  for (int y = im.height * 5 / 8; y < im.height * 7 / 8; ++y)
    for (int x = im.width / 4; x < im.width * 3 / 4; ++x)
      for (int c = 0; c < 3; ++c) im.at(y, x, c) = c == 1 ? 0.9f : 0.2f;
}

}  // namespace

void write_synthetic_dataset(const std::filesystem::path& dir, std::uint64_t seed) {
  constexpr int kCount = 8, kSize = 48;
  Rng rng(seed);
  std::vector<dataset::SubjectRecord> subjects;
  std::vector<dataset::ImageRecord> images;
  const std::vector<dataset::FilterSpec> filters{
      {"tint", "Pink Tint Filter", SourceApp::other, FilterCategory::beautification, nlohmann::json::object()},
      {"sticker", "Sticker Filter", SourceApp::other, FilterCategory::occlusion, nlohmann::json::object()}};
  const std::pair<const char*, int> poses[] = {{"smiling_front", 0}, {"neutral_left", -3}, {"neutral_right", 3},
                                               {"smiling_left", -2},  {"smiling_right", 2}};

  for (int i = 0; i < kCount; ++i) {
    const auto id = fmt::format("p{}", i + 1);
    subjects.push_back({id, 20 + 6 * i, i % 2 == 0 ? Gender::male : Gender::female, static_cast<Ethnicity>(i % 4),
                        nlohmann::json::object()});
    Look look{{static_cast<float>(rng.uniform(0.2, 0.95)), static_cast<float>(rng.uniform(0.2, 0.95)),
               static_cast<float>(rng.uniform(0.2, 0.95))},
              static_cast<float>(0.25 + 0.12 * i), i % 2 == 1};

    auto save = [&](const dataset::Image& im, const std::string& name, const std::string& pose,
                    const std::string& filter) {
      const auto rel = "images/" + id + "/" + name + ".png";
      dataset::save_image(im, dir / rel);
      images.push_back({id + "_" + name, id, pose, filter, rel, nlohmann::json::object()});
    };
    save(render_face(look, kSize, 0, 1.0f, rng), "neutral_front", std::string(dataset::kNeutralFront),
         std::string(dataset::kNoFilter));
    for (const auto& [pose, shift] : poses)
      save(render_face(look, kSize, shift, static_cast<float>(rng.uniform(0.9, 1.1)), rng), pose, pose,
           std::string(dataset::kNoFilter));
    auto tinted = render_face(look, kSize, 0, 1.0f, rng);
    apply_tint(tinted);
    save(tinted, "tint", std::string(dataset::kNeutralFront), "tint");
    auto stickered = render_face(look, kSize, 0, 1.0f, rng);
    apply_sticker(stickered);
    save(stickered, "sticker", std::string(dataset::kNeutralFront), "sticker");
  }
  dataset::save_manifest(dataset::DatasetManifest(subjects, images, filters), dir / "manifest.jsonl");
  io::write_text(dir / "train.cfg", synthetic_config(seed));
}

std::string synthetic_config(std::uint64_t seed, int epochs) {
  return fmt::format(
      "# tiny network for the synthetic fixture\n"
      "epochs = {}\n"
      "batch_size = 8\n"
      "learning_rate = 0.002\n"
      "optimizer = adaptive_moment\n"
      "seed = {}\n"
      "freeze_extractor = true\n"
      "head_epochs = 40\n"
      "head_learning_rate = 0.001\n"
      "age_loss = mae\n"
      "input_size = 32\n"
      "stem_channels = 8\n"
      "stem_kernel = 3\n"
      "stem_stride = 1\n"
      "stem_pool = true\n"
      "backbone_blocks = 1,1\n"
      "backbone_width = 8\n"
      "backbone_expansion = 2\n"
      "bridge_width = 8\n"
      "bridge_kernel = 3\n"
      "feature_dim = 2048\n"
      "head_hidden = 32\n",
      epochs, seed);
}

}  // namespace ffsense::fixtures
