#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "driftlab/instance.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

enum class DriftKind { none, sudden, gradual, incremental };
enum class StreamFamily { hyperplane, led, rbf, sea, random_tree };

struct StreamSpec {
  StreamFamily family = StreamFamily::hyperplane;
  std::string name = "stream";
  int n_features = 10;
  int n_classes = 2;
  std::int64_t length = 100000;
  DriftKind kind = DriftKind::none;
  std::int64_t t1 = 0;
  std::int64_t t2 = 0;
  std::uint64_t seed = 1;
  int concept_offset = 0;
  int rbf_centroids = 50;
  int tree_depth = 5;
  double led_noise = 0.1;
};

class StreamSource {
 public:
  virtual ~StreamSource() = default;
  virtual bool next(Instance* out) = 0;
  virtual int n_features() const = 0;
  virtual int n_classes() const = 0;
};

class SyntheticStream : public StreamSource {
 public:
  explicit SyntheticStream(StreamSpec spec);

  bool next(Instance* out) override;
  int n_features() const override { return spec_.n_features; }
  int n_classes() const override { return spec_.n_classes; }
  const StreamSpec& spec() const { return spec_; }

 private:
  struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
  };
  struct Concept {
    Eigen::VectorXd hyp_w;
    double hyp_theta = 0.0;
    std::vector<int> led_perm;
    Eigen::MatrixXd rbf_centers;
    std::vector<int> rbf_class;
    Eigen::VectorXd rbf_weight_cdf;
    Eigen::VectorXd rbf_sigma;
    double sea_theta = 0.0;
    std::vector<TreeNode> tre_nodes;
  };

  Concept make_concept(int index) const;
  void draw(const Concept& c, Eigen::VectorXd* x, int* label);
  double mix_alpha(std::int64_t j) const;

  StreamSpec spec_;
  Rng rng_;
  Concept c0_;
  Concept c1_;
  std::int64_t emitted_ = 0;
};

// Names: HYP_I, LED_S, RBF_G, RBF_S, SEA_G, TRE_S. length_scale in (0,1]
// shrinks the stream while keeping the drift centered at the midpoint.
StreamSpec make_benchmark(const std::string& name, double length_scale);

struct CsvSchema {
  std::string label_column = "label";
  int max_malformed = 100;
};

class CsvStream : public StreamSource {
 public:
  CsvStream(const std::string& path, CsvSchema schema = {});

  bool next(Instance* out) override;
  int n_features() const override { return n_features_; }
  int n_classes() const override { return static_cast<int>(label_names_.size()); }
  int skipped() const { return skipped_; }
  const std::vector<std::string>& label_names() const { return label_names_; }

 private:
  bool parse_row(const std::string& line, Eigen::VectorXd* x, std::string* label) const;

  std::string path_;
  CsvSchema schema_;
  int n_features_ = 0;
  int label_index_ = -1;
  std::vector<std::string> label_names_;
  int skipped_ = 0;
  std::ifstream in_;
  std::int64_t emitted_ = 0;
};

void write_stream_csv(StreamSource& stream, const std::string& path,
                      std::int64_t max_rows = -1);

}  // namespace driftlab
