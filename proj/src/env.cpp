#include "safe_explore/env.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "safe_explore/error.hpp"

namespace safe_explore::env {

GridWorld::GridWorld(GridShape shape, std::vector<std::vector<double>> safety, double threshold,
                     StateSet initial_safe, double noise_std)
    : shape_(shape),
      safety_(std::move(safety)),
      threshold_(threshold),
      initial_safe_(std::move(initial_safe)),
      noise_std_(noise_std) {
  if (shape_.rows <= 0 || shape_.cols <= 0)
    throw Error(ErrorCode::invalid_parameter, "grid must have positive dimensions");
  if (safety_.empty()) throw Error(ErrorCode::invalid_parameter, "safety field needs at least one slice");
  for (const auto& slice : safety_) {
    if (slice.size() != static_cast<std::size_t>(shape_.size()))
      throw Error(ErrorCode::invalid_parameter, "safety slice does not match the grid size");
    if (!std::all_of(slice.begin(), slice.end(), [](double v) { return std::isfinite(v); }))
      throw Error(ErrorCode::invalid_parameter, "safety field must be finite");
  }
  if (!(std::isfinite(noise_std_) && noise_std_ >= 0.0))
    throw Error(ErrorCode::invalid_parameter, "noise_std must be finite and non-negative");
  if (initial_safe_.universe() != static_cast<std::size_t>(shape_.size()))
    throw Error(ErrorCode::invalid_parameter, "initial safe set does not match the grid size");
  if (initial_safe_.empty()) throw Error(ErrorCode::invalid_parameter, "initial safe set is empty");
  initial_safe_.for_each([&](StateId s) {
    if (safety_[0][static_cast<std::size_t>(s)] < threshold_)
      throw Error(ErrorCode::invalid_parameter,
                  "initial safe state " + std::to_string(s) + " is below the threshold at t=0");
  });
}

double GridWorld::observe(int t, StateId s, Rng& rng) const {
  const double g = safety(t, s);
  if (noise_std_ == 0.0) return g;
  std::normal_distribution<double> noise(0.0, noise_std_);
  return g + noise(rng);
}

double GridWorld::min_safety() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& slice : safety_) m = std::min(m, *std::min_element(slice.begin(), slice.end()));
  return m;
}

double GridWorld::max_safety() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& slice : safety_) m = std::max(m, *std::max_element(slice.begin(), slice.end()));
  return m;
}

std::optional<StateId> pick_start_state(const GridShape& shape, std::span<const double> slice0,
                                        double threshold, double margin) {
  if (slice0.size() != static_cast<std::size_t>(shape.size()) || slice0.empty()) return std::nullopt;
  const auto it = std::max_element(slice0.begin(), slice0.end());  // first maximum
  if (*it < threshold + margin) return std::nullopt;
  return static_cast<StateId>(it - slice0.begin());
}

GridWorld generate_random_env(const EnvGenSpec& spec) {
  if (spec.shape.rows <= 0 || spec.shape.cols <= 0 || spec.horizon <= 0)
    throw Error(ErrorCode::invalid_parameter, "generator needs a positive grid size and horizon");
  if (!(spec.variance > 0.0 && spec.length_scale > 0.0 && spec.temporal_drift >= 0.0))
    throw Error(ErrorCode::invalid_parameter, "generator kernel parameters must be positive");

  const GridShape& shape = spec.shape;
  const auto n = static_cast<Eigen::Index>(shape.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = euclidean_distance(shape, static_cast<StateId>(i), static_cast<StateId>(j));
      K(i, j) = spec.variance * std::exp(-d * d / (2.0 * spec.length_scale * spec.length_scale));
    }
  }

  Eigen::LLT<Eigen::MatrixXd> chol;
  bool factored = false;
  for (double rel : {1e-10, 1e-8, 1e-6}) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += rel * spec.variance;
    chol.compute(A);
    if (chol.info() == Eigen::Success) {
      factored = true;
      break;
    }
  }
  if (!factored)
    throw Error(ErrorCode::ill_conditioned, "generator covariance is not positive definite after jitter");
  const Eigen::MatrixXd L = chol.matrixL();

  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  for (int attempt = 0; attempt <= spec.max_redraws; ++attempt) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    const Eigen::VectorXd base = L * z;

    std::vector<std::vector<double>> g(static_cast<std::size_t>(spec.horizon),
                                       std::vector<double>(static_cast<std::size_t>(n)));
    for (Eigen::Index i = 0; i < n; ++i) g[0][static_cast<std::size_t>(i)] = base(i);
    for (int t = 0; t + 1 < spec.horizon; ++t) {
      const double phi = uniform(rng);
      for (std::size_t s = 0; s < g[0].size(); ++s)
        g[t + 1][s] = g[t][s] + spec.temporal_drift * phi * g[0][s];
    }

    if (auto start = pick_start_state(shape, g[0], spec.threshold, spec.start_margin)) {
      StateSet initial(static_cast<std::size_t>(n));
      initial.insert(*start);
      return GridWorld(shape, std::move(g), spec.threshold, std::move(initial), spec.noise_std);
    }
  }
  throw Error(ErrorCode::invalid_parameter,
              "no generated field had a state above threshold + margin after " +
                  std::to_string(spec.max_redraws + 1) + " draws");
}

TerrainEnv load_terrain_env(std::span<const Frame> frames, int steps, double threshold,
                            double noise_std, double start_margin) {
  if (frames.size() < 2) throw Error(ErrorCode::invalid_parameter, "terrain needs at least two frames");
  if (steps < static_cast<int>(frames.size()))
    throw Error(ErrorCode::invalid_parameter, "steps must be at least the number of frames");
  const int rows = frames[0].rows;
  const int cols = frames[0].cols;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& f = frames[k];
    if (f.rows != rows || f.cols != cols ||
        f.pixels.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
      throw Error(ErrorCode::format, "frame " + std::to_string(k) + " is " + std::to_string(f.rows) +
                                         "x" + std::to_string(f.cols) + ", expected " +
                                         std::to_string(rows) + "x" + std::to_string(cols));
  }

  TerrainNormalization norm;
  norm.input_min = std::numeric_limits<double>::infinity();
  norm.input_max = -std::numeric_limits<double>::infinity();
  for (const Frame& f : frames) {
    const auto [lo, hi] = std::minmax_element(f.pixels.begin(), f.pixels.end());
    norm.input_min = std::min(norm.input_min, *lo);
    norm.input_max = std::max(norm.input_max, *hi);
  }
  if (!(norm.input_max > norm.input_min))
    throw Error(ErrorCode::degenerate_normalization, "terrain frames are constant; cannot rescale");

  const double span = norm.input_max - norm.input_min;
  const double out_span = norm.output_max - norm.output_min;
  std::vector<std::vector<double>> scaled(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    scaled[k].reserve(frames[k].pixels.size());
    for (double v : frames[k].pixels)
      scaled[k].push_back(norm.output_min + out_span * ((v - norm.input_min) / span));
  }

  const int last = static_cast<int>(frames.size()) - 1;
  std::vector<int> nodes(frames.size());
  for (int k = 0; k <= last; ++k)
    nodes[static_cast<std::size_t>(k)] =
        static_cast<int>(std::lround(static_cast<double>(k) * (steps - 1) / last));

  std::vector<std::vector<double>> g(static_cast<std::size_t>(steps));
  int seg = 0;
  for (int j = 0; j < steps; ++j) {
    while (seg < last - 1 && j >= nodes[static_cast<std::size_t>(seg) + 1]) ++seg;
    const auto& a = scaled[static_cast<std::size_t>(seg)];
    const auto& b = scaled[static_cast<std::size_t>(seg) + 1];
    const int j0 = nodes[static_cast<std::size_t>(seg)];
    const int j1 = nodes[static_cast<std::size_t>(seg) + 1];
    if (j == j0) {
      g[static_cast<std::size_t>(j)] = a;
    } else if (j == j1) {
      g[static_cast<std::size_t>(j)] = b;
    } else {
      const double frac = static_cast<double>(j - j0) / (j1 - j0);
      auto& out = g[static_cast<std::size_t>(j)];
      out.resize(a.size());
      for (std::size_t s = 0; s < a.size(); ++s) out[s] = a[s] + frac * (b[s] - a[s]);
    }
  }

  const GridShape shape{rows, cols};
  auto start = pick_start_state(shape, g[0], threshold, start_margin);
  if (!start)
    throw Error(ErrorCode::invalid_parameter, "no terrain cell at t=0 clears threshold + margin");
  StateSet initial(static_cast<std::size_t>(shape.size()));
  initial.insert(*start);
  return TerrainEnv{GridWorld(shape, std::move(g), threshold, std::move(initial), noise_std), norm,
                    std::move(nodes)};
}

// ---- file formats -------------------------------------------------------

namespace {

bool ends_with_ci(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

double parse_double(std::string_view field, const std::filesystem::path& path, std::size_t line) {
  while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
  while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw Error(ErrorCode::format, path.string() + ":" + std::to_string(line) + ": bad number '" +
                                       std::string(field) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Frame read_csv_frame(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  Frame f;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split(line, ',');
    if (f.rows == 0) f.cols = static_cast<int>(fields.size());
    if (static_cast<int>(fields.size()) != f.cols)
      throw Error(ErrorCode::format, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                         std::to_string(f.cols) + " columns, got " +
                                         std::to_string(fields.size()));
    for (auto field : fields) f.pixels.push_back(parse_double(field, path, lineno));
    ++f.rows;
  }
  if (f.rows == 0) throw Error(ErrorCode::format, path.string() + ": empty matrix");
  return f;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in, const std::filesystem::path& path) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  if (tok.empty()) throw Error(ErrorCode::format, path.string() + ": truncated PGM header");
  return tok;
}

int pgm_int(std::istream& in, const std::filesystem::path& path, int min_value) {
  const std::string tok = pgm_token(in, path);
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v < min_value)
    throw Error(ErrorCode::format, path.string() + ": bad PGM value '" + tok + "'");
  return v;
}

Frame read_pgm_frame(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  const std::string magic = pgm_token(in, path);
  if (magic != "P2" && magic != "P5")
    throw Error(ErrorCode::format, path.string() + ": not a PGM file (magic '" + magic + "')");
  Frame f;
  f.cols = pgm_int(in, path, 1);
  f.rows = pgm_int(in, path, 1);
  const int maxval = pgm_int(in, path, 1);
  if (maxval > 65535) throw Error(ErrorCode::format, path.string() + ": PGM maxval above 65535");
  const std::size_t count = static_cast<std::size_t>(f.rows) * static_cast<std::size_t>(f.cols);
  f.pixels.reserve(count);
  if (magic == "P2") {
    for (std::size_t i = 0; i < count; ++i) f.pixels.push_back(pgm_int(in, path, 0));
  } else {
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(count * static_cast<std::size_t>(bytes));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
      throw Error(ErrorCode::format, path.string() + ": truncated PGM pixel data");
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned v = bytes == 1 ? raw[i] : (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
      f.pixels.push_back(static_cast<double>(v));
    }
  }
  return f;
}

}  // namespace

Frame read_frame(const std::filesystem::path& path) {
  const std::string name = path.string();
  if (ends_with_ci(name, ".csv") || ends_with_ci(name, ".txt")) return read_csv_frame(path);
  if (ends_with_ci(name, ".pgm") || ends_with_ci(name, ".pnm")) return read_pgm_frame(path);
  throw Error(ErrorCode::format, name + ": unsupported frame format (expected .pgm or .csv)");
}

void write_pgm(const std::filesystem::path& path, const Frame& frame, int maxval) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << "P5\n" << frame.cols << ' ' << frame.rows << '\n' << maxval << '\n';
  for (double v : frame.pixels) {
    const auto q = static_cast<unsigned>(std::clamp(std::lround(v), 0L, static_cast<long>(maxval)));
    if (maxval < 256) {
      out.put(static_cast<char>(q));
    } else {
      out.put(static_cast<char>(q >> 8));
      out.put(static_cast<char>(q & 0xff));
    }
  }
}

void write_env_csv(const std::filesystem::path& path, const GridWorld& world) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << "t,row,col,g\n";
  const GridShape& shape = world.shape();
  char buf[64];
  for (int t = 0; t < world.horizon(); ++t) {
    for (StateId s = 0; s < shape.size(); ++s) {
      std::snprintf(buf, sizeof buf, "%.17g", world.safety(t, s));
      out << t << ',' << shape.row(s) << ',' << shape.col(s) << ',' << buf << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::io, "failed writing " + path.string());
}

GridWorld read_env_csv(const std::filesystem::path& path, double threshold, StateSet initial_safe,
                       double noise_std) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,row,col,g", 0) != 0)
    throw Error(ErrorCode::format, path.string() + ": missing 't,row,col,g' header");
  struct Row { int t, r, c; double g; };
  std::vector<Row> rows;
  int max_t = -1, max_r = -1, max_c = -1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw Error(ErrorCode::format, path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    Row r{static_cast<int>(parse_double(f[0], path, lineno)), static_cast<int>(parse_double(f[1], path, lineno)),
          static_cast<int>(parse_double(f[2], path, lineno)), parse_double(f[3], path, lineno)};
    if (r.t < 0 || r.r < 0 || r.c < 0) throw Error(ErrorCode::format, path.string() + ":" + std::to_string(lineno) + ": negative index");
    max_t = std::max(max_t, r.t);
    max_r = std::max(max_r, r.r);
    max_c = std::max(max_c, r.c);
    rows.push_back(r);
  }
  const GridShape shape{max_r + 1, max_c + 1};
  const std::size_t expected = static_cast<std::size_t>(max_t + 1) * static_cast<std::size_t>(shape.size());
  if (rows.empty() || rows.size() != expected)
    throw Error(ErrorCode::format, path.string() + ": expected a dense t x row x col table");
  std::vector<std::vector<double>> g(static_cast<std::size_t>(max_t + 1),
                                     std::vector<double>(static_cast<std::size_t>(shape.size()),
                                                         std::numeric_limits<double>::quiet_NaN()));
  for (const Row& r : rows) g[static_cast<std::size_t>(r.t)][static_cast<std::size_t>(shape.index(r.r, r.c))] = r.g;
  return GridWorld(shape, std::move(g), threshold, std::move(initial_safe), noise_std);
}

}  // namespace safe_explore::env
