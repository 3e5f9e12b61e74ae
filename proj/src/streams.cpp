#include "driftlab/streams.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace driftlab {

namespace {

// Classic 7-segment encodings for digits 0..9.
constexpr int kLedSegments[10][7] = {
    {1, 1, 1, 0, 1, 1, 1}, {0, 0, 1, 0, 0, 1, 0}, {1, 0, 1, 1, 1, 0, 1},
    {1, 0, 1, 1, 0, 1, 1}, {0, 1, 1, 1, 0, 1, 0}, {1, 1, 0, 1, 0, 1, 1},
    {1, 1, 0, 1, 1, 1, 1}, {1, 0, 1, 0, 0, 1, 0}, {1, 1, 1, 1, 1, 1, 1},
    {1, 1, 1, 1, 0, 1, 1}};

constexpr double kSeaThresholds[4] = {8.0, 9.0, 7.0, 9.5};

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trimmed(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

SyntheticStream::SyntheticStream(StreamSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {
  if (spec_.n_features < 1) throw std::invalid_argument("stream: need at least one feature");
  if (spec_.n_classes < 2) throw std::invalid_argument("stream: need at least two classes");
  if (spec_.length < 1) throw std::invalid_argument("stream: length must be positive");
  switch (spec_.family) {
    case StreamFamily::led:
      if (spec_.n_classes != 10 || spec_.n_features < 7) {
        throw std::invalid_argument("led stream: requires 10 classes and >= 7 features");
      }
      break;
    case StreamFamily::sea:
      if (spec_.n_classes != 4 || spec_.n_features < 2) {
        throw std::invalid_argument("sea stream: requires 4 classes and >= 2 features");
      }
      break;
    case StreamFamily::rbf:
      if (spec_.rbf_centroids < spec_.n_classes) {
        throw std::invalid_argument("rbf stream: need at least one centroid per class");
      }
      break;
    default:
      break;
  }
  if (spec_.kind == DriftKind::gradual || spec_.kind == DriftKind::incremental) {
    if (!(spec_.t1 < spec_.t2)) {
      throw std::invalid_argument("stream: transition needs t1 < t2");
    }
  }
  c0_ = make_concept(0);
  c1_ = spec_.kind == DriftKind::none ? c0_ : make_concept(1);
}

SyntheticStream::Concept SyntheticStream::make_concept(int index) const {
  index += spec_.concept_offset;
  Rng crng(derive_seed(spec_.seed, "concept|" + std::to_string(index)));
  const int v = spec_.n_features;
  const int z = spec_.n_classes;
  Concept c;
  switch (spec_.family) {
    case StreamFamily::hyperplane: {
      c.hyp_w.resize(v);
      for (int f = 0; f < v; ++f) c.hyp_w[f] = crng.uniform();
      c.hyp_theta = c.hyp_w.sum() / 2.0;
      break;
    }
    case StreamFamily::led: {
      c.led_perm.resize(v);
      for (int f = 0; f < v; ++f) c.led_perm[f] = f;
      for (int f = v - 1; f > 0; --f) {
        std::swap(c.led_perm[f], c.led_perm[crng.below(static_cast<std::uint64_t>(f) + 1)]);
      }
      break;
    }
    case StreamFamily::rbf: {
      const int m = spec_.rbf_centroids;
      c.rbf_centers.resize(m, v);
      c.rbf_class.resize(m);
      c.rbf_sigma.resize(m);
      Eigen::VectorXd w(m);
      for (int i = 0; i < m; ++i) {
        for (int f = 0; f < v; ++f) c.rbf_centers(i, f) = crng.uniform();
        c.rbf_class[i] = i % z;
        w[i] = crng.uniform();
        c.rbf_sigma[i] = crng.uniform(0.02, 0.12);
      }
      c.rbf_weight_cdf.resize(m);
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        acc += w[i];
        c.rbf_weight_cdf[i] = acc;
      }
      c.rbf_weight_cdf /= acc;
      break;
    }
    case StreamFamily::sea: {
      c.sea_theta = kSeaThresholds[index % 4];
      break;
    }
    case StreamFamily::random_tree: {
      int offset = static_cast<int>(crng.below(z));
      int leaf_count = 0;
      // Iterative build of a complete binary tree of the configured depth.
      struct Frame {
        int node;
        int depth;
      };
      c.tre_nodes.push_back({});
      std::vector<Frame> stack{{0, 0}};
      while (!stack.empty()) {
        Frame fr = stack.back();
        stack.pop_back();
        if (fr.depth >= spec_.tree_depth) {
          c.tre_nodes[fr.node].label = (leaf_count++ + offset) % z;
          continue;
        }
        int fi = static_cast<int>(crng.below(v));
        double thr = crng.uniform();
        int li = static_cast<int>(c.tre_nodes.size());
        c.tre_nodes.push_back({});
        int ri = static_cast<int>(c.tre_nodes.size());
        c.tre_nodes.push_back({});
        c.tre_nodes[fr.node].feature = fi;
        c.tre_nodes[fr.node].threshold = thr;
        c.tre_nodes[fr.node].left = li;
        c.tre_nodes[fr.node].right = ri;
        stack.push_back({ri, fr.depth + 1});
        stack.push_back({li, fr.depth + 1});
      }
      break;
    }
  }
  return c;
}

void SyntheticStream::draw(const Concept& c, Eigen::VectorXd* x, int* label) {
  const int v = spec_.n_features;
  x->resize(v);
  switch (spec_.family) {
    case StreamFamily::hyperplane: {
      for (int f = 0; f < v; ++f) (*x)[f] = rng_.uniform();
      *label = c.hyp_w.dot(*x) >= c.hyp_theta ? 1 : 0;
      break;
    }
    case StreamFamily::led: {
      int digit = static_cast<int>(rng_.below(10));
      Eigen::VectorXd raw(v);
      for (int s = 0; s < 7; ++s) {
        double bit = kLedSegments[digit][s];
        if (rng_.bernoulli(spec_.led_noise)) bit = 1.0 - bit;
        raw[s] = bit;
      }
      for (int f = 7; f < v; ++f) raw[f] = rng_.bernoulli(0.5) ? 1.0 : 0.0;
      for (int f = 0; f < v; ++f) (*x)[c.led_perm[f]] = raw[f];
      *label = digit;
      break;
    }
    case StreamFamily::rbf: {
      double u = rng_.uniform();
      int pick = 0;
      while (pick + 1 < c.rbf_weight_cdf.size() && c.rbf_weight_cdf[pick] < u) ++pick;
      for (int f = 0; f < v; ++f) {
        (*x)[f] = c.rbf_centers(pick, f) + c.rbf_sigma[pick] * rng_.gaussian();
      }
      *label = c.rbf_class[pick];
      break;
    }
    case StreamFamily::sea: {
      for (int f = 0; f < v; ++f) (*x)[f] = rng_.uniform(0.0, 10.0);
      double s = (*x)[0] + (*x)[1];
      if (s <= c.sea_theta - 3.0) {
        *label = 0;
      } else if (s <= c.sea_theta) {
        *label = 1;
      } else if (s <= c.sea_theta + 3.0) {
        *label = 2;
      } else {
        *label = 3;
      }
      break;
    }
    case StreamFamily::random_tree: {
      for (int f = 0; f < v; ++f) (*x)[f] = rng_.uniform();
      int idx = 0;
      while (c.tre_nodes[idx].feature >= 0) {
        const TreeNode& n = c.tre_nodes[idx];
        idx = (*x)[n.feature] <= n.threshold ? n.left : n.right;
      }
      *label = c.tre_nodes[idx].label;
      break;
    }
  }
}

double SyntheticStream::mix_alpha(std::int64_t j) const {
  if (j < spec_.t1) return 0.0;
  if (j >= spec_.t2) return 1.0;
  return static_cast<double>(j - spec_.t1) / static_cast<double>(spec_.t2 - spec_.t1);
}

bool SyntheticStream::next(Instance* out) {
  if (emitted_ >= spec_.length) return false;
  const std::int64_t j = emitted_;
  int src = 0;
  const Concept* c = &c0_;
  Concept blended;
  switch (spec_.kind) {
    case DriftKind::none:
      break;
    case DriftKind::sudden:
      if (j >= spec_.t1) {
        src = 1;
        c = &c1_;
      }
      break;
    case DriftKind::gradual: {
      double a = mix_alpha(j);
      if (a >= 1.0) {
        src = 1;
      } else if (a > 0.0) {
        src = rng_.uniform() < a ? 1 : 0;
      }
      c = src == 1 ? &c1_ : &c0_;
      break;
    }
    case DriftKind::incremental: {
      double a = mix_alpha(j);
      if (spec_.family == StreamFamily::hyperplane) {
        if (a >= 1.0) {
          src = 1;
          c = &c1_;
        } else if (a > 0.0) {
          blended.hyp_w = (1.0 - a) * c0_.hyp_w + a * c1_.hyp_w;
          blended.hyp_theta = blended.hyp_w.sum() / 2.0;
          src = a > 0.5 ? 1 : 0;
          c = &blended;
        }
      } else {
        if (a >= 1.0) {
          src = 1;
        } else if (a > 0.0) {
          src = rng_.uniform() < a ? 1 : 0;
        }
        c = src == 1 ? &c1_ : &c0_;
      }
      break;
    }
  }
  draw(*c, &out->x, &out->label);
  out->clean_label = out->label;
  out->label_visible = true;
  out->poisoned = false;
  out->concept_src = src;
  out->index = j;
  ++emitted_;
  return true;
}

StreamSpec make_benchmark(const std::string& name, double length_scale) {
  if (!(length_scale > 0.0 && length_scale <= 1.0)) {
    throw std::invalid_argument("make_benchmark: length_scale must be in (0, 1]");
  }
  StreamSpec s;
  s.name = name;
  if (name == "HYP_I") {
    s.family = StreamFamily::hyperplane;
    s.n_features = 10;
    s.n_classes = 2;
    s.length = 1000000;
    s.kind = DriftKind::incremental;
  } else if (name == "LED_S") {
    s.family = StreamFamily::led;
    s.n_features = 24;
    s.n_classes = 10;
    s.length = 1000000;
    s.kind = DriftKind::sudden;
  } else if (name == "RBF_G") {
    s.family = StreamFamily::rbf;
    s.n_features = 40;
    s.n_classes = 20;
    s.length = 1000000;
    s.kind = DriftKind::gradual;
  } else if (name == "RBF_S") {
    s.family = StreamFamily::rbf;
    s.n_features = 20;
    s.n_classes = 10;
    s.length = 1000000;
    s.kind = DriftKind::sudden;
  } else if (name == "SEA_G") {
    s.family = StreamFamily::sea;
    s.n_features = 3;
    s.n_classes = 4;
    s.length = 3000000;
    s.kind = DriftKind::gradual;
  } else if (name == "TRE_S") {
    s.family = StreamFamily::random_tree;
    s.n_features = 10;
    s.n_classes = 6;
    s.length = 2000000;
    s.kind = DriftKind::sudden;
  } else {
    throw std::invalid_argument("make_benchmark: unknown benchmark " + name);
  }
  s.length = static_cast<std::int64_t>(std::ceil(length_scale * static_cast<double>(s.length)));
  if (s.kind == DriftKind::sudden) {
    s.t1 = (s.length + 1) / 2;
    s.t2 = s.t1;
  } else {
    s.t1 = static_cast<std::int64_t>(0.4 * static_cast<double>(s.length));
    s.t2 = static_cast<std::int64_t>(0.6 * static_cast<double>(s.length));
    if (s.t2 <= s.t1) s.t2 = s.t1 + 1;
  }
  return s;
}

CsvStream::CsvStream(const std::string& path, CsvSchema schema)
    : path_(path), schema_(std::move(schema)) {
  std::ifstream scan(path_);
  if (!scan) throw std::runtime_error("csv: cannot open " + path_);
  std::string line;
  if (!std::getline(scan, line)) throw std::runtime_error("csv: empty file " + path_);
  std::vector<std::string> header = split_csv(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == schema_.label_column) label_index_ = static_cast<int>(i);
  }
  if (label_index_ < 0) {
    throw std::runtime_error("csv: label column '" + schema_.label_column + "' not in header");
  }
  n_features_ = static_cast<int>(header.size()) - 1;
  if (n_features_ < 1) throw std::runtime_error("csv: no feature columns");
  Eigen::VectorXd x;
  std::string label;
  while (std::getline(scan, line)) {
    if (trimmed(line).empty()) continue;
    if (!parse_row(line, &x, &label)) {
      if (++skipped_ > schema_.max_malformed) {
        throw std::runtime_error("csv: malformed row limit exceeded in " + path_);
      }
      continue;
    }
    if (std::find(label_names_.begin(), label_names_.end(), label) == label_names_.end()) {
      label_names_.push_back(label);
    }
  }
  if (label_names_.empty()) throw std::runtime_error("csv: no usable rows in " + path_);
  in_.open(path_);
  std::getline(in_, line);
}

bool CsvStream::parse_row(const std::string& line, Eigen::VectorXd* x,
                          std::string* label) const {
  std::vector<std::string> fields = split_csv(line);
  if (static_cast<int>(fields.size()) != n_features_ + 1) return false;
  x->resize(n_features_);
  int fi = 0;
  for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
    if (i == label_index_) {
      if (fields[i].empty()) return false;
      *label = fields[i];
      continue;
    }
    try {
      std::size_t pos = 0;
      (*x)[fi] = std::stod(fields[i], &pos);
      if (pos != fields[i].size()) return false;
    } catch (const std::exception&) {
      return false;
    }
    ++fi;
  }
  return true;
}

bool CsvStream::next(Instance* out) {
  std::string line;
  Eigen::VectorXd x;
  std::string label;
  while (std::getline(in_, line)) {
    if (trimmed(line).empty()) continue;
    if (!parse_row(line, &x, &label)) continue;
    auto it = std::find(label_names_.begin(), label_names_.end(), label);
    out->x = std::move(x);
    out->label = static_cast<int>(it - label_names_.begin());
    out->clean_label = out->label;
    out->label_visible = true;
    out->poisoned = false;
    out->concept_src = 0;
    out->index = emitted_++;
    return true;
  }
  return false;
}

void write_stream_csv(StreamSource& stream, const std::string& path, std::int64_t max_rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  out << std::setprecision(17);
  for (int f = 0; f < stream.n_features(); ++f) out << 'f' << f << ',';
  out << "label\n";
  Instance inst;
  std::int64_t written = 0;
  while ((max_rows < 0 || written < max_rows) && stream.next(&inst)) {
    for (int f = 0; f < stream.n_features(); ++f) out << inst.x[f] << ',';
    out << inst.label << '\n';
    ++written;
  }
}

}  // namespace driftlab
