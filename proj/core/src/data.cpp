#include "srouda/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace srouda {

namespace {

constexpr double kGridNoiseSd = 0.05;
constexpr double kGridHi = 0.9;
constexpr double kGridLo = 0.1;

struct SplitResult {
  Mat train;
  LabeledSet eval;
};

/// Shuffles rows, strips labels from the first 70% and keeps the rest as
/// the labeled evaluation split.
SplitResult split_target(const Mat& X, const Eigen::VectorXi& y, Rng& rng) {
  const Eigen::Index n = X.rows();
  const auto perm = rng.permutation(static_cast<std::size_t>(n));
  const Eigen::Index n_train = static_cast<Eigen::Index>(std::lround(0.7 * n));
  SplitResult out;
  out.train.resize(n_train, X.cols());
  out.eval.X.resize(n - n_train, X.cols());
  out.eval.y.resize(n - n_train);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
    if (i < n_train) {
      out.train.row(i) = X.row(src);
    } else {
      out.eval.X.row(i - n_train) = X.row(src);
      out.eval.y[i - n_train] = y[src];
    }
  }
  return out;
}

Mat make_moons(int n, double noise_sd, Rng& rng) {
  const int per_class = n / 2;
  Mat X(n, 2);
  for (int i = 0; i < per_class; ++i) {
    const double t =
        per_class == 1 ? 0.0 : std::numbers::pi * i / (per_class - 1);
    // arcs centered so the union has zero mean before noise
    X(i, 0) = std::cos(t) - 0.5 + noise_sd * rng.normal();
    X(i, 1) = std::sin(t) - 0.25 + noise_sd * rng.normal();
    X(per_class + i, 0) = 0.5 - std::cos(t) + noise_sd * rng.normal();
    X(per_class + i, 1) = 0.25 - std::sin(t) + noise_sd * rng.normal();
  }
  return X;
}

Eigen::VectorXi moon_labels(int n) {
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) y[i] = i < n / 2 ? 0 : 1;
  return y;
}

}  // namespace

double compute_input_scale(const Mat& X) {
  if (X.rows() == 0) return 1.0;
  const Eigen::RowVectorXd mean = X.colwise().mean();
  double var = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    var += (X.col(j).array() - mean[j]).square().sum() / X.rows();
  }
  return std::sqrt(var / X.cols());
}

Mat rotate_2d(const Mat& points, double degrees) {
  if (points.cols() != 2) throw ShapeError("rotate_2d expects 2-D points");
  const double rad = degrees * std::numbers::pi / 180.0;
  Eigen::Matrix2d R;
  R << std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad);
  return points * R.transpose();
}

DomainPair gen_two_moons_shift(int n, double rotation_deg, double noise_sd, Rng& rng) {
  if (n < 2 || n % 2 != 0) throw ValidationError("two-moons n must be even and >= 2");
  if (rotation_deg < 0.0 || rotation_deg > 90.0) {
    throw ValidationError("rotation_deg must lie in [0, 90]");
  }
  Rng rs = rng.substream("source");
  Rng rt = rng.substream("target");
  Rng rsplit = rng.substream("split");

  DomainPair pair;
  pair.source.X = make_moons(n, noise_sd, rs);
  pair.source.y = moon_labels(n);

  Mat Xt = rotate_2d(make_moons(n, noise_sd, rt), rotation_deg);
  auto split = split_target(Xt, moon_labels(n), rsplit);
  pair.target_train = std::move(split.train);
  pair.target_eval = std::move(split.eval);

  pair.meta.dim = 2;
  pair.meta.num_classes = 2;
  pair.meta.input_scale = compute_input_scale(pair.source.X);
  return pair;
}

DomainPair gen_gaussian_shift(int n, int d, double mean_shift, Rng& rng) {
  if (d < 1) throw ValidationError("gaussian shift requires d >= 1");
  if (n < 2 || n % 2 != 0) throw ValidationError("gaussian n must be even and >= 2");
  Rng rs = rng.substream("source");
  Rng rt = rng.substream("target");
  Rng rsplit = rng.substream("split");

  auto draw = [d, n](Rng& r, double shift) {
    Mat X(n, d);
    for (int i = 0; i < n; ++i) {
      const double mu = i < n / 2 ? -1.0 : 1.0;
      for (int j = 0; j < d; ++j) {
        X(i, j) = r.normal() + (j == 0 ? mu + shift : 0.0);
      }
    }
    return X;
  };

  DomainPair pair;
  pair.source.X = draw(rs, 0.0);
  pair.source.y = moon_labels(n);

  auto split = split_target(draw(rt, mean_shift), moon_labels(n), rsplit);
  pair.target_train = std::move(split.train);
  pair.target_eval = std::move(split.eval);

  pair.meta.dim = d;
  pair.meta.num_classes = 2;
  pair.meta.input_scale = compute_input_scale(pair.source.X);
  return pair;
}

std::vector<Vec> grid_templates(const GridShape& shape) {
  shape.validate();
  std::vector<Vec> t(4, Vec::Constant(shape.pixel_count(), kGridLo));
  for (int ch = 0; ch < shape.c; ++ch) {
    for (int r = 0; r < shape.h; ++r) {
      for (int col = 0; col < shape.w; ++col) {
        if ((r / 2) % 2 == 0) t[0][shape.index(ch, r, col)] = kGridHi;
        if ((col / 2) % 2 == 0) t[1][shape.index(ch, r, col)] = kGridHi;
        if (r < shape.h / 2 && col < shape.w / 2) {
          t[2][shape.index(ch, r, col)] = kGridHi;
        }
        if (r >= shape.h / 2 && col >= shape.w / 2) {
          t[3][shape.index(ch, r, col)] = kGridHi;
        }
      }
    }
  }
  return t;
}

DomainPair gen_grid_shift(int n, const GridShape& shape, double style_shift, Rng& rng) {
  shape.validate();
  if (n < 8) throw ValidationError("grid shift requires n >= 8");
  if (style_shift < 0.0 || style_shift > 1.0) {
    throw ValidationError("style_shift must lie in [0, 1]");
  }
  const auto templates = grid_templates(shape);
  Rng rs = rng.substream("source");
  Rng rt = rng.substream("target");
  Rng rsplit = rng.substream("split");

  auto draw = [&](Rng& r, bool invert) {
    Mat X(n, shape.pixel_count());
    for (int i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < X.cols(); ++j) {
        double v = templates[static_cast<std::size_t>(i % 4)][j];
        if (invert) v = style_shift + (1.0 - 2.0 * style_shift) * v;
        v += kGridNoiseSd * r.normal();
        X(i, j) = std::clamp(v, 0.0, 1.0);
      }
    }
    return X;
  };
  auto labels = [n]() {
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) y[i] = i % 4;
    return y;
  };

  DomainPair pair;
  pair.source.X = draw(rs, false);
  pair.source.y = labels();

  auto split = split_target(draw(rt, true), labels(), rsplit);
  pair.target_train = std::move(split.train);
  pair.target_eval = std::move(split.eval);

  pair.meta.dim = shape.pixel_count();
  pair.meta.num_classes = 4;
  pair.meta.grid = shape;
  pair.meta.clip_range = std::make_pair(0.0, 1.0);
  pair.meta.input_scale = 1.0;
  return pair;
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

namespace {

void write_row(std::FILE* f, const Eigen::RowVectorXd& x, int label, char domain) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    std::fprintf(f, "%.17g,", x[j]);
  }
  std::fprintf(f, "%d,%c\n", label, domain);
}

}  // namespace

void save_dataset(const DomainPair& pair, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write dataset file: " + path);
  if (pair.meta.grid) {
    std::fprintf(f, "# grid %d %d %d\n", pair.meta.grid->h, pair.meta.grid->w,
                 pair.meta.grid->c);
  }
  for (int j = 0; j < pair.meta.dim; ++j) {
    std::fprintf(f, "feature_%d,", j);
  }
  std::fprintf(f, "label,domain\n");
  for (Eigen::Index i = 0; i < pair.source.size(); ++i) {
    write_row(f, pair.source.X.row(i), pair.source.y[i], 's');
  }
  for (Eigen::Index i = 0; i < pair.target_train.rows(); ++i) {
    write_row(f, pair.target_train.row(i), -1, 't');
  }
  for (Eigen::Index i = 0; i < pair.target_eval.size(); ++i) {
    write_row(f, pair.target_eval.X.row(i), pair.target_eval.y[i], 't');
  }
  std::fclose(f);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

DomainPair load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset file: " + path);

  std::string line;
  std::optional<GridShape> grid;
  // optional sidecar lines before the header
  while (std::getline(in, line)) {
    if (line.rfind("# grid", 0) == 0) {
      GridShape g;
      std::istringstream ss(line.substr(6));
      if (!(ss >> g.h >> g.w >> g.c)) throw SchemaError("malformed grid sidecar line");
      grid = g;
      continue;
    }
    if (!line.empty() && line[0] == '#') continue;
    break;  // header line
  }
  const auto header = split_csv_line(line);
  if (header.size() < 3) throw SchemaError("dataset header has too few columns");
  const int d = static_cast<int>(header.size()) - 2;
  for (int j = 0; j < d; ++j) {
    if (header[static_cast<std::size_t>(j)] != "feature_" + std::to_string(j)) {
      throw SchemaError("dataset header: expected column feature_" + std::to_string(j));
    }
  }
  if (header[static_cast<std::size_t>(d)] != "label") {
    throw SchemaError("dataset header: missing column 'label'");
  }
  if (header[static_cast<std::size_t>(d) + 1] != "domain") {
    throw SchemaError("dataset header: missing column 'domain'");
  }

  std::vector<Eigen::RowVectorXd> src_x, ttr_x, tev_x;
  std::vector<int> src_y, tev_y;
  int max_label = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SchemaError("dataset row has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
    }
    Eigen::RowVectorXd x(d);
    for (int j = 0; j < d; ++j) {
      std::size_t pos = 0;
      x[j] = std::stod(cells[static_cast<std::size_t>(j)], &pos);
    }
    const int label = std::stoi(cells[static_cast<std::size_t>(d)]);
    const std::string& dom = cells[static_cast<std::size_t>(d) + 1];
    max_label = std::max(max_label, label);
    if (dom == "s") {
      if (label < 0) throw SchemaError("source row without a label");
      src_x.push_back(x);
      src_y.push_back(label);
    } else if (dom == "t") {
      if (label < 0) {
        ttr_x.push_back(x);
      } else {
        tev_x.push_back(x);
        tev_y.push_back(label);
      }
    } else {
      throw SchemaError("unknown domain tag: " + dom);
    }
  }

  auto to_set = [d](const std::vector<Eigen::RowVectorXd>& xs,
                    const std::vector<int>& ys) {
    LabeledSet s;
    s.X.resize(static_cast<Eigen::Index>(xs.size()), d);
    s.y.resize(static_cast<Eigen::Index>(ys.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      s.X.row(static_cast<Eigen::Index>(i)) = xs[i];
    }
    for (std::size_t i = 0; i < ys.size(); ++i) {
      s.y[static_cast<Eigen::Index>(i)] = ys[i];
    }
    return s;
  };

  DomainPair pair;
  pair.source = to_set(src_x, src_y);
  pair.target_eval = to_set(tev_x, tev_y);
  pair.target_train.resize(static_cast<Eigen::Index>(ttr_x.size()), d);
  for (std::size_t i = 0; i < ttr_x.size(); ++i) {
    pair.target_train.row(static_cast<Eigen::Index>(i)) = ttr_x[i];
  }
  pair.meta.dim = d;
  pair.meta.num_classes = max_label + 1;
  pair.meta.grid = grid;
  if (grid) {
    pair.meta.clip_range = std::make_pair(0.0, 1.0);
    pair.meta.input_scale = 1.0;
  } else {
    pair.meta.input_scale = compute_input_scale(pair.source.X);
  }
  return pair;
}

}  // namespace srouda
