#include "pitr/itr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pitr/serialize.hpp"

namespace pitr {

std::string to_string(ItrVariant variant) {
  switch (variant) {
    case ItrVariant::knn:
      return "knn";
    case ItrVariant::full_pairs:
      return "full_pairs";
    case ItrVariant::bagged:
      return "bagged";
  }
  return "full_pairs";
}

Subsample draw_subsample(std::size_t m, std::size_t n, double q, Rng& rng) {
  if (!(q > 0.0) || q > 1.0) throw ValidationError("subsampling probability must be in (0, 1]");
  if (m == 0 || n == 0) throw ValidationError("both arms must be nonempty");
  const std::size_t k = std::min(m, n);
  std::size_t ell = 0;
  do {
    ell = static_cast<std::size_t>(rng.binomial(k, q));
  } while (ell == 0);  // a base learner cannot train on an empty set

  Subsample out;
  // alpha: partial Fisher-Yates over [0, m) keeps the ordered tuple uniform
  // among injections.
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < ell; ++i) {
    const std::size_t j = i + rng.uniform_index(m - i);
    std::swap(pool[i], pool[j]);
  }
  out.alpha.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(ell));
  // beta: a uniform increasing injection is a uniform ell-subset, sorted.
  std::vector<std::size_t> pool_b(n);
  std::iota(pool_b.begin(), pool_b.end(), std::size_t{0});
  for (std::size_t i = 0; i < ell; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(pool_b[i], pool_b[j]);
  }
  out.beta.assign(pool_b.begin(), pool_b.begin() + static_cast<std::ptrdiff_t>(ell));
  std::sort(out.beta.begin(), out.beta.end());
  return out;
}

double ItrModel::ipb_encoded(std::span<const double> x) const {
  if (variant_ == ItrVariant::knn) return knn_->ipb_hat(x);
  std::vector<double> pair_features(2 * x.size());
  std::copy(x.begin(), x.end(), pair_features.begin());
  std::copy(x.begin(), x.end(), pair_features.begin() + static_cast<std::ptrdiff_t>(x.size()));
  double acc = 0.0;
  for (const RandomForestClassifier& learner : learners_) {
    const ClassProbabilities p = learner.predict_proba(pair_features);
    acc += p.p_plus - p.p_minus;
  }
  return acc / static_cast<double>(learners_.size());
}

double ItrModel::ipb(std::span<const std::string> raw_row, std::size_t* unseen_count) const {
  return ipb_encoded(encoding_.encode(raw_row, unseen_count));
}

ItrModel ItrModel::from_learners(ItrVariant variant, ScoreSpec spec, CovariateEncoding encoding,
                                 std::vector<RandomForestClassifier> learners,
                                 std::optional<BaggingConfig> bag) {
  if (learners.empty()) throw ValidationError("a classifier-backed model needs >= 1 learner");
  ItrModel model;
  model.variant_ = variant;
  model.spec_ = std::move(spec);
  model.encoding_ = std::move(encoding);
  model.learners_ = std::move(learners);
  model.bag_ = std::move(bag);
  return model;
}

ItrModel ItrModel::from_knn(KnnModel knn) {
  ItrModel model;
  model.variant_ = ItrVariant::knn;
  model.encoding_ = knn.data().encoding;
  model.spec_ = knn.spec();
  model.knn_.emplace(std::move(knn));
  return model;
}

ItrModel fit_full_pairs(const TrialDataset& data, const ScoreSpec& spec,
                        const ForestConfig& config, std::size_t pair_budget,
                        std::size_t n_threads) {
  data.validate();
  validate(spec);
  PairMatrix pairs = build_pair_matrix(data, spec, pair_budget);
  RandomForestClassifier forest = fit_forest(config, pairs.features, pairs.labels, n_threads);
  std::vector<RandomForestClassifier> learners;
  learners.push_back(std::move(forest));
  return ItrModel::from_learners(ItrVariant::full_pairs, spec, data.encoding, std::move(learners));
}

ItrModel fit_bagged(const TrialDataset& data, const ScoreSpec& spec, const BaggingConfig& bag,
                    const ForestConfig& base, std::size_t n_threads) {
  data.validate();
  validate(spec);
  if (bag.b < 1) throw ValidationError("bag count must be >= 1");
  const std::size_t m = data.m(), n = data.n(), d = data.covariate_dim();
  const std::size_t k = std::min(m, n);
  BaggingConfig effective = bag;
  if (effective.q == 0.0) effective.q = std::pow(static_cast<double>(k), -0.25);
  if (!(effective.q > 0.0) || effective.q > 1.0)
    throw ValidationError("subsampling probability must be in (0, 1]");

  std::vector<RandomForestClassifier> learners(effective.b);
  parallel_for(effective.b, n_threads, [&](std::size_t v) {
    Rng rng(derive_seed(effective.seed, "bag/subsample", v));
    const Subsample sub = draw_subsample(m, n, effective.q, rng);
    const std::size_t ell = sub.alpha.size();
    FeatureMatrix features(ell, 2 * d);
    std::vector<std::int8_t> labels(ell);
    for (std::size_t i = 0; i < ell; ++i) {
      const Subject& ctrl = data.control[sub.alpha[i]];
      const Subject& expt = data.experimental[sub.beta[i]];
      for (std::size_t f = 0; f < d; ++f) {
        features.set(i, f, ctrl.covariates[f]);
        features.set(i, d + f, expt.covariates[f]);
      }
      labels[i] = static_cast<std::int8_t>(score(spec, ctrl.outcomes, expt.outcomes));
    }
    ForestConfig per_bag = base;
    per_bag.seed = derive_seed(effective.seed ^ base.seed, "bag/forest", v);
    learners[v] = fit_forest(per_bag, features, labels, 1);
  });
  return ItrModel::from_learners(ItrVariant::bagged, spec, data.encoding, std::move(learners),
                                 effective);
}

ItrModel fit_knn(const TrialDataset& data, const ScoreSpec& spec, const KnnConfig& config) {
  KnnConfig effective = config;
  if (effective.c == 0 || effective.e == 0) {
    const auto [c, e] = default_neighbor_counts(data.m(), data.n());
    if (effective.c == 0) effective.c = c;
    if (effective.e == 0) effective.e = e;
  }
  return ItrModel::from_knn(KnnModel(data, spec, effective));
}

namespace {

constexpr char kMagic[4] = {'P', 'I', 'T', 'R'};
constexpr std::uint32_t kFormatVersion = 1;

void write_score_spec(std::ostream& out, const ScoreSpec& spec) {
  bin::write_u64(out, spec.levels.size());
  for (const PriorityLevel& lvl : spec.levels) {
    bin::write_u8(out, static_cast<std::uint8_t>(lvl.kind));
    bin::write_u8(out, static_cast<std::uint8_t>(lvl.direction));
    bin::write_f64(out, lvl.threshold);
  }
}

ScoreSpec read_score_spec(std::istream& in) {
  ScoreSpec spec;
  spec.levels.resize(bin::read_u64(in));
  for (PriorityLevel& lvl : spec.levels) {
    lvl.kind = static_cast<OutcomeKind>(bin::read_u8(in));
    lvl.direction = static_cast<Direction>(bin::read_u8(in));
    lvl.threshold = bin::read_f64(in);
  }
  return spec;
}

void write_encoding(std::ostream& out, const CovariateEncoding& encoding) {
  bin::write_u64(out, encoding.columns.size());
  for (const ColumnEncoding& col : encoding.columns) {
    bin::write_string(out, col.name);
    bin::write_u8(out, col.categorical ? 1 : 0);
    bin::write_u64(out, col.categories.size());
    for (const std::string& cat : col.categories) bin::write_string(out, cat);
    bin::write_u8(out, col.standardized ? 1 : 0);
    bin::write_f64(out, col.mean);
    bin::write_f64(out, col.sd);
  }
}

CovariateEncoding read_encoding(std::istream& in) {
  CovariateEncoding encoding;
  encoding.columns.resize(bin::read_u64(in));
  for (ColumnEncoding& col : encoding.columns) {
    col.name = bin::read_string(in);
    col.categorical = bin::read_u8(in) != 0;
    col.categories.resize(bin::read_u64(in));
    for (std::string& cat : col.categories) cat = bin::read_string(in);
    col.standardized = bin::read_u8(in) != 0;
    col.mean = bin::read_f64(in);
    col.sd = bin::read_f64(in);
  }
  return encoding;
}

void write_dataset(std::ostream& out, const TrialDataset& data) {
  write_encoding(out, data.encoding);
  bin::write_u64(out, data.covariate_dim());
  bin::write_u64(out, data.outcome_dim());
  for (const std::vector<Subject>* arm : {&data.control, &data.experimental}) {
    bin::write_u64(out, arm->size());
    for (const Subject& s : *arm) {
      for (double v : s.covariates) bin::write_f64(out, v);
      for (double v : s.outcomes) bin::write_f64(out, v);
    }
  }
}

TrialDataset read_dataset(std::istream& in) {
  TrialDataset data;
  data.encoding = read_encoding(in);
  const std::size_t d = bin::read_u64(in);
  const std::size_t q = bin::read_u64(in);
  for (std::vector<Subject>* arm : {&data.control, &data.experimental}) {
    arm->resize(bin::read_u64(in));
    for (Subject& s : *arm) {
      s.covariates.resize(d);
      for (double& v : s.covariates) v = bin::read_f64(in);
      s.outcomes.resize(q);
      for (double& v : s.outcomes) v = bin::read_f64(in);
      s.arm = arm == &data.control ? Arm::control : Arm::experimental;
    }
  }
  return data;
}

}  // namespace

void ItrModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open model file for writing: " + path);
  bin::write_bytes(out, kMagic, 4);
  bin::write_u32(out, kFormatVersion);
  bin::write_u8(out, static_cast<std::uint8_t>(variant_));
  write_score_spec(out, spec_);
  write_encoding(out, encoding_);
  if (variant_ == ItrVariant::knn) {
    const KnnModel& knn = *knn_;
    bin::write_u64(out, knn.config().c);
    bin::write_u64(out, knn.config().e);
    bin::write_u8(out, static_cast<std::uint8_t>(knn.config().metric));
    write_dataset(out, knn.data());
  } else {
    if (bag_) {
      bin::write_u8(out, 1);
      bin::write_u64(out, bag_->b);
      bin::write_f64(out, bag_->q);
      bin::write_u64(out, bag_->seed);
    } else {
      bin::write_u8(out, 0);
    }
    bin::write_u64(out, learners_.size());
    for (const RandomForestClassifier& learner : learners_) learner.save(out);
  }
  if (!out) throw ValidationError("failed writing model file: " + path);
}

ItrModel ItrModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file: " + path);
  char magic[4];
  bin::read_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw ValidationError(path + " is not a model file (bad magic)");
  const std::uint32_t version = bin::read_u32(in);
  if (version != kFormatVersion)
    throw ValidationError("unsupported model format version " + std::to_string(version));
  const auto variant = static_cast<ItrVariant>(bin::read_u8(in));
  ScoreSpec spec = read_score_spec(in);
  CovariateEncoding encoding = read_encoding(in);
  if (variant == ItrVariant::knn) {
    KnnConfig config;
    config.c = bin::read_u64(in);
    config.e = bin::read_u64(in);
    config.metric = static_cast<Metric>(bin::read_u8(in));
    TrialDataset data = read_dataset(in);
    return from_knn(KnnModel(std::move(data), std::move(spec), config));
  }
  std::optional<BaggingConfig> bag;
  if (bin::read_u8(in) != 0) {
    BaggingConfig b;
    b.b = bin::read_u64(in);
    b.q = bin::read_f64(in);
    b.seed = bin::read_u64(in);
    bag = b;
  }
  std::vector<RandomForestClassifier> learners(bin::read_u64(in));
  for (RandomForestClassifier& learner : learners) learner = RandomForestClassifier::load(in);
  return from_learners(variant, std::move(spec), std::move(encoding), std::move(learners),
                       std::move(bag));
}

}  // namespace pitr
