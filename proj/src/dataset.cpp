#include "xmod/dataset.hpp"
#include "xmod/snapshots.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace xmod {

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

namespace fs = std::filesystem;

std::vector<Index> EmbeddingDataset::rows_of_class(int c) const {
  std::vector<Index> out;
  for (Index i = 0; i < static_cast<Index>(labels.size()); ++i)
    if (labels[static_cast<std::size_t>(i)] == c) out.push_back(i);
  return out;
}

void EmbeddingDataset::validate() const {
  if (visual.cols() < 1) throw Error(ErrorCode::InvalidArgument, "dataset dimension must be >= 1");
  detail::require_same_dim(text.cols(), visual.cols(), "text feature dimension");
  detail::require_same_dim(static_cast<Index>(class_names.size()), text.rows(), "class name count");
  detail::check_labels(labels, visual.rows(), text.rows());
  std::vector<int> counts(static_cast<std::size_t>(classes()), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (int c = 0; c < classes(); ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw Error(ErrorCode::InsufficientSamples, "class '" + class_names[static_cast<std::size_t>(c)] + "' is empty");
    }
  }
  if (!all_finite(visual) || !all_finite(text)) throw Error(ErrorCode::NonFiniteLoss, "dataset has NaN/Inf features");
}

EmbeddingDataset quantize(const EmbeddingDataset& ds) {
  EmbeddingDataset out = ds;
  // Mirrors the load path: widen from float32, then renormalize each row.
  out.visual = normalize_rows(ds.visual.cast<float>().cast<double>());
  out.text = normalize_rows(ds.text.cast<float>().cast<double>());
  return out;
}

void SyntheticConfig::validate() const {
  if (classes < 1 || per_class < 1) throw Error(ErrorCode::InvalidArgument, "classes and per-class must be >= 1");
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "synthetic dimension must be >= 2");
  if (!(noise >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise must be >= 0");
  if (!(gap >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gap must be >= 0");
  if (!std::isfinite(rotation)) throw Error(ErrorCode::InvalidArgument, "rotation must be finite");
}

namespace {

Vector gaussian(Index n, double sigma, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = sigma * g(rng);
  return v;
}

// Rotates every vector by exactly `angle`: planes (q_{2k}, q_{2k+1}) of a random
// orthonormal basis are each turned by the same angle.
Matrix plane_rotation(Index dim, double angle, Rng& rng) {
  Matrix raw(dim, dim);
  for (Index j = 0; j < dim; ++j) raw.col(j) = gaussian(dim, 1.0, rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(raw).householderQ();
  Matrix block = Matrix::Identity(dim, dim);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (Index k = 0; k + 1 < dim; k += 2) {
    block(k, k) = c;
    block(k, k + 1) = -s;
    block(k + 1, k) = s;
    block(k + 1, k + 1) = c;
  }
  return q * block * q.transpose();
}

}  // namespace

EmbeddingDataset gen_synthetic(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const Index d = config.dim;

  FeatureMatrix anchors(config.classes, d);
  constexpr int kAttempts = 10000;
  for (int c = 0; c < config.classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      const Vector candidate = l2_normalize(gaussian(d, 1.0, rng));
      placed = true;
      for (int prev = 0; prev < c && placed; ++prev) placed = anchors.row(prev).dot(candidate) < config.max_anchor_cos;
      if (placed) anchors.row(c) = candidate.transpose();
    }
    if (!placed) {
      throw Error(ErrorCode::AnchorRejectionExhausted,
                  "could not place " + std::to_string(config.classes) + " separated anchors in dimension " +
                      std::to_string(d));
    }
  }

  const bool rotate = config.rotation != 0.0;
  const Matrix rotation = plane_rotation(d, config.rotation, rng);
  const Vector offset = l2_normalize(gaussian(d, 1.0, rng));
  const double per_coord = config.noise / std::sqrt(static_cast<double>(d));

  EmbeddingDataset ds;
  ds.source = "synthetic";
  ds.text = anchors;
  ds.visual.resize(static_cast<Index>(config.classes) * config.per_class, d);
  ds.labels.reserve(static_cast<std::size_t>(ds.visual.rows()));
  Index row = 0;
  for (int c = 0; c < config.classes; ++c) {
    std::ostringstream name;
    name << "class_" << std::setw(3) << std::setfill('0') << c;
    ds.class_names.push_back(name.str());
    const Vector center = rotate ? Vector(rotation * anchors.row(c).transpose()) : Vector(anchors.row(c).transpose());
    for (int s = 0; s < config.per_class; ++s) {
      Vector v = center + gaussian(d, per_coord, rng) + config.gap * offset;
      ds.visual.row(row++) = l2_normalize(v).transpose();
      ds.labels.push_back(c);
    }
  }
  std::ostringstream meta;
  meta << std::setprecision(17) << "classes=" << config.classes << ";per_class=" << config.per_class
       << ";noise=" << config.noise << ";gap=" << config.gap << ";rotation=" << config.rotation
       << ";seed=" << config.seed;
  ds.metadata["generator"] = meta.str();
  return ds;
}

// --- container --------------------------------------------------------------

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string checksum_string(std::uint64_t h) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

const std::string* Manifest::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

const std::string& Manifest::at(const std::string& key) const {
  if (const auto* v = find(key)) return *v;
  throw Error(ErrorCode::TruncatedFile, "manifest is missing key '" + key + "'");
}

std::string Manifest::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
  return out;
}

Manifest Manifest::parse(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::TruncatedFile, "malformed manifest line '" + line + "'");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      return v.substr(b, v.find_last_not_of(" \t") - b + 1);
    };
    m.entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return m;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

namespace {

std::span<const unsigned char> as_bytes(const std::string& s) {
  return {reinterpret_cast<const unsigned char*>(s.data()), s.size()};
}

std::string encode_f32(const FeatureMatrix& m) {
  std::string out(static_cast<std::size_t>(m.size()) * 4, '\0');
  std::size_t off = 0;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const float f = static_cast<float>(m(i, j));
      std::memcpy(out.data() + off, &f, 4);
      off += 4;
    }
  }
  return out;
}

std::string encode_f64(const Matrix& m) {
  std::string out(static_cast<std::size_t>(m.size()) * 8, '\0');
  std::size_t off = 0;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      std::memcpy(out.data() + off, &v, 8);
      off += 8;
    }
  }
  return out;
}

Matrix decode_f64(const std::string& bytes, std::size_t offset, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      std::memcpy(&m(i, j), bytes.data() + offset, 8);
      offset += 8;
    }
  }
  return m;
}

std::string encode_u32(const LabelList& labels) {
  std::string out(labels.size() * 4, '\0');
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = static_cast<std::uint32_t>(labels[i]);
    std::memcpy(out.data() + 4 * i, &l, 4);
  }
  return out;
}

FeatureMatrix decode_f32(const std::string& bytes, Index rows, Index cols) {
  FeatureMatrix m(rows, cols);
  std::size_t off = 0;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      float f;
      std::memcpy(&f, bytes.data() + off, 4);
      m(i, j) = f;
      off += 4;
    }
  }
  return m;
}

long long parse_int(const Manifest& m, const std::string& key) {
  const std::string& v = m.at(key);
  try {
    std::size_t used = 0;
    long long x = std::stoll(v, &used);
    if (used != v.size() || x < 0) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::TruncatedFile, "manifest key '" + key + "' is not a non-negative integer");
  }
}

std::string load_payload(const fs::path& dir, const Manifest& m, const std::string& name, std::size_t expected) {
  const std::string bytes = read_file(dir / name);
  if (bytes.size() != expected) {
    throw Error(ErrorCode::TruncatedFile, name + " holds " + std::to_string(bytes.size()) + " bytes, manifest implies " +
                                              std::to_string(expected));
  }
  const std::string& recorded = m.at("checksum." + name);
  if (recorded != checksum_string(fnv1a64(as_bytes(bytes)))) {
    throw Error(ErrorCode::ChecksumMismatch, name + " does not match its manifest checksum");
  }
  return bytes;
}

}  // namespace

void save_dataset(const EmbeddingDataset& ds, const fs::path& dir) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

  const std::string features = encode_f32(ds.visual);
  const std::string text = encode_f32(ds.text);
  const std::string labels = encode_u32(ds.labels);

  Manifest m;
  m.set("format_version", std::to_string(kFormatVersion));
  m.set("dtype", "f32le");
  m.set("label_dtype", "u32le");
  m.set("d", std::to_string(ds.dim()));
  m.set("count", std::to_string(ds.count()));
  m.set("C", std::to_string(ds.classes()));
  m.set("source", ds.source);
  for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
    if (ds.class_names[c].find('\n') != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "class names cannot contain newlines");
    }
    m.set("class." + std::to_string(c), ds.class_names[c]);
  }
  for (const auto& [k, v] : ds.metadata) m.set("meta." + k, v);
  m.set("checksum.features.bin", checksum_string(fnv1a64(as_bytes(features))));
  m.set("checksum.labels.bin", checksum_string(fnv1a64(as_bytes(labels))));
  m.set("checksum.text_features.bin", checksum_string(fnv1a64(as_bytes(text))));

  write_file(dir / "features.bin", features);
  write_file(dir / "labels.bin", labels);
  write_file(dir / "text_features.bin", text);
  write_file(dir / "manifest", m.to_text());
}

LoadedDataset load_dataset(const fs::path& dir) {
  const Manifest m = Manifest::parse(read_file(dir / "manifest"));
  if (m.at("format_version") != std::to_string(kFormatVersion)) {
    throw Error(ErrorCode::FormatVersionMismatch, "unsupported format_version " + m.at("format_version"));
  }
  if (m.at("dtype") != "f32le") throw Error(ErrorCode::FormatVersionMismatch, "unsupported dtype " + m.at("dtype"));
  if (const auto* ld = m.find("label_dtype"); ld && *ld != "u32le") {
    throw Error(ErrorCode::FormatVersionMismatch, "unsupported label_dtype " + *ld);
  }
  const auto d = static_cast<Index>(parse_int(m, "d"));
  const auto count = static_cast<Index>(parse_int(m, "count"));
  const auto classes = static_cast<Index>(parse_int(m, "C"));

  LoadedDataset out;
  EmbeddingDataset& ds = out.dataset;
  const std::string features = load_payload(dir, m, "features.bin", static_cast<std::size_t>(count * d) * 4);
  const std::string labels = load_payload(dir, m, "labels.bin", static_cast<std::size_t>(count) * 4);
  const std::string text = load_payload(dir, m, "text_features.bin", static_cast<std::size_t>(classes * d) * 4);

  ds.visual = decode_f32(features, count, d);
  ds.text = decode_f32(text, classes, d);
  ds.labels.resize(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    std::uint32_t l;
    std::memcpy(&l, labels.data() + 4 * i, 4);
    if (l >= static_cast<std::uint32_t>(classes)) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(l) + " in labels.bin row " + std::to_string(i));
    }
    ds.labels[static_cast<std::size_t>(i)] = static_cast<int>(l);
  }

  static const char* known[] = {"format_version", "dtype", "label_dtype", "d", "count", "C", "source",
                                "checksum.features.bin", "checksum.labels.bin", "checksum.text_features.bin"};
  ds.class_names.assign(static_cast<std::size_t>(classes), std::string());
  std::vector<bool> named(static_cast<std::size_t>(classes), false);
  for (const auto& [k, v] : m.entries) {
    if (k.rfind("class.", 0) == 0) {
      std::size_t used = 0;
      long long c = -1;
      try {
        c = std::stoll(k.substr(6), &used);
      } catch (const std::exception&) {
      }
      if (c < 0 || c >= classes || used != k.size() - 6) {
        out.warnings.push_back("ignoring manifest key '" + k + "'");
        continue;
      }
      ds.class_names[static_cast<std::size_t>(c)] = v;
      named[static_cast<std::size_t>(c)] = true;
    } else if (k.rfind("meta.", 0) == 0) {
      ds.metadata[k.substr(5)] = v;
    } else if (std::find(std::begin(known), std::end(known), k) == std::end(known)) {
      out.warnings.push_back("unknown manifest key '" + k + "'");
    }
  }
  for (Index c = 0; c < classes; ++c) {
    if (!named[static_cast<std::size_t>(c)]) throw Error(ErrorCode::TruncatedFile, "class " + std::to_string(c) + " has no name");
  }
  if (const auto* s = m.find("source")) ds.source = *s;

  auto audit = [&](FeatureMatrix& rows, const char* what) {
    int off = 0;
    for (Index i = 0; i < rows.rows(); ++i) {
      const double norm = rows.row(i).norm();
      if (!(norm >= kZeroNormThreshold)) throw Error(ErrorCode::ZeroVector, std::string(what) + " row has zero norm");
      if (std::abs(norm - 1.0) > 1e-4) ++off;
      rows.row(i) /= norm;
    }
    if (off > 0) out.warnings.push_back(std::to_string(off) + " " + what + " rows were not unit-norm within 1e-4");
  };
  audit(ds.visual, "visual");
  audit(ds.text, "text");
  ds.validate();
  return out;
}

namespace {

std::vector<std::vector<double>> read_csv_rows(const fs::path& path, Index& dim, std::vector<int>& labels) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::TruncatedFile, path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "label") {
    throw Error(ErrorCode::FormatVersionMismatch, path.string() + ": header must be label,v0,...");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "v" + std::to_string(j - 1)) {
      throw Error(ErrorCode::FormatVersionMismatch, path.string() + ": unexpected column '" + header[j] + "'");
    }
  }
  dim = static_cast<Index>(header.size() - 1);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    int label = -1;
    bool first = true;
    while (std::getline(ls, cell, ',')) {
      try {
        if (first) label = std::stoi(cell);
        else vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::FormatVersionMismatch, path.string() + ": bad cell '" + cell + "'");
      }
      first = false;
    }
    if (static_cast<Index>(vals.size()) != dim) {
      throw Error(ErrorCode::TruncatedFile, path.string() + ": row has " + std::to_string(vals.size()) + " values");
    }
    labels.push_back(label);
    rows.push_back(std::move(vals));
  }
  return rows;
}

}  // namespace

EmbeddingDataset import_csv(const fs::path& visual_csv, const fs::path& text_csv) {
  Index dv = 0, dt = 0;
  std::vector<int> vlabels, tlabels;
  const auto vrows = read_csv_rows(visual_csv, dv, vlabels);
  const auto trows = read_csv_rows(text_csv, dt, tlabels);
  detail::require_same_dim(dv, dt, "csv feature dimension");

  EmbeddingDataset ds;
  ds.source = "csv";
  const auto classes = static_cast<Index>(trows.size());
  ds.text.resize(classes, dt);
  std::vector<bool> seen(static_cast<std::size_t>(classes), false);
  for (std::size_t r = 0; r < trows.size(); ++r) {
    const int c = tlabels[r];
    if (c < 0 || c >= classes || seen[static_cast<std::size_t>(c)]) {
      throw Error(ErrorCode::LabelOutOfRange, "text csv must list each class index 0..C-1 exactly once");
    }
    seen[static_cast<std::size_t>(c)] = true;
    for (Index j = 0; j < dt; ++j) ds.text(c, j) = trows[r][static_cast<std::size_t>(j)];
  }
  ds.visual.resize(static_cast<Index>(vrows.size()), dv);
  for (std::size_t r = 0; r < vrows.size(); ++r)
    for (Index j = 0; j < dv; ++j) ds.visual(static_cast<Index>(r), j) = vrows[r][static_cast<std::size_t>(j)];
  ds.labels = vlabels;
  ds.visual = normalize_rows(ds.visual);
  ds.text = normalize_rows(ds.text);
  for (Index c = 0; c < classes; ++c) ds.class_names.push_back("class_" + std::to_string(c));
  ds.validate();
  return ds;
}

// --- adapter snapshots --------------------------------------------------------

void save_snapshots(const SnapshotSet& set, const fs::path& dir) {
  if (set.snapshots.empty()) throw Error(ErrorCode::InvalidArgument, "no snapshots to save");
  const LowRankAdapter& first = set.snapshots.front();
  detail::check_labels(set.labels, set.support.rows(), set.text.rows());
  detail::require_same_dim(set.support.cols(), first.dim(), "snapshot support dimension");
  detail::require_same_dim(set.text.cols(), first.dim(), "snapshot text dimension");

  Matrix params(static_cast<Index>(set.snapshots.size()), first.parameter_count());
  for (std::size_t s = 0; s < set.snapshots.size(); ++s) {
    const LowRankAdapter& a = set.snapshots[s];
    if (a.dim() != first.dim() || a.rank() != first.rank() || a.scale != first.scale || a.branch != first.branch) {
      throw Error(ErrorCode::DimensionMismatch, "snapshots must share shape, scale and branch");
    }
    params.row(static_cast<Index>(s)) = a.parameters().transpose();
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  const std::string snapshots = encode_f64(params);
  const std::string support = encode_f64(set.support);
  const std::string labels = encode_u32(set.labels);
  const std::string text = encode_f64(set.text);

  char scale[64];
  std::snprintf(scale, sizeof scale, "%a", first.scale);
  Manifest m;
  m.set("format_version", std::to_string(kFormatVersion));
  m.set("kind", "adapter_snapshots");
  m.set("dtype", "f64le");
  m.set("label_dtype", "u32le");
  m.set("d", std::to_string(first.dim()));
  m.set("r", std::to_string(first.rank()));
  m.set("scale", scale);
  m.set("branch", to_string(first.branch));
  m.set("count", std::to_string(set.snapshots.size()));
  m.set("n", std::to_string(set.support.rows()));
  m.set("C", std::to_string(set.text.rows()));
  m.set("checksum.snapshots.bin", checksum_string(fnv1a64(as_bytes(snapshots))));
  m.set("checksum.support.bin", checksum_string(fnv1a64(as_bytes(support))));
  m.set("checksum.support_labels.bin", checksum_string(fnv1a64(as_bytes(labels))));
  m.set("checksum.text.bin", checksum_string(fnv1a64(as_bytes(text))));
  write_file(dir / "snapshots.bin", snapshots);
  write_file(dir / "support.bin", support);
  write_file(dir / "support_labels.bin", labels);
  write_file(dir / "text.bin", text);
  write_file(dir / "manifest", m.to_text());
}

SnapshotSet load_snapshots(const fs::path& dir) {
  const Manifest m = Manifest::parse(read_file(dir / "manifest"));
  if (m.at("format_version") != std::to_string(kFormatVersion) || m.at("kind") != "adapter_snapshots" ||
      m.at("dtype") != "f64le") {
    throw Error(ErrorCode::FormatVersionMismatch, dir.string() + " is not a version-1 snapshot directory");
  }
  const auto d = static_cast<Index>(parse_int(m, "d"));
  const auto r = static_cast<Index>(parse_int(m, "r"));
  const auto count = static_cast<Index>(parse_int(m, "count"));
  const auto n = static_cast<Index>(parse_int(m, "n"));
  const auto classes = static_cast<Index>(parse_int(m, "C"));
  const std::string& scale_text = m.at("scale");
  char* end = nullptr;
  const double scale = std::strtod(scale_text.c_str(), &end);
  if (end == scale_text.c_str() || *end != '\0') throw Error(ErrorCode::TruncatedFile, "bad snapshot scale");
  const Branch branch = parse_branch(m.at("branch"));

  const auto per = static_cast<std::size_t>(2 * r * d);
  const std::string snapshots = load_payload(dir, m, "snapshots.bin", static_cast<std::size_t>(count) * per * 8);
  const std::string support = load_payload(dir, m, "support.bin", static_cast<std::size_t>(n * d) * 8);
  const std::string labels = load_payload(dir, m, "support_labels.bin", static_cast<std::size_t>(n) * 4);
  const std::string text = load_payload(dir, m, "text.bin", static_cast<std::size_t>(classes * d) * 8);

  SnapshotSet set;
  const Matrix params = decode_f64(snapshots, 0, count, static_cast<Index>(per));
  for (Index s = 0; s < count; ++s) {
    LowRankAdapter a;
    a.down = Matrix::Zero(r, d);
    a.up = Matrix::Zero(d, r);
    a.scale = scale;
    a.branch = branch;
    a.set_parameters(params.row(s).transpose());
    set.snapshots.push_back(std::move(a));
  }
  set.support = decode_f64(support, 0, n, d);
  set.text = decode_f64(text, 0, classes, d);
  set.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::uint32_t l;
    std::memcpy(&l, labels.data() + 4 * i, 4);
    set.labels[static_cast<std::size_t>(i)] = static_cast<int>(l);
  }
  detail::check_labels(set.labels, n, classes);
  return set;
}

}  // namespace xmod
