#include "leo/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "leo/errors.hpp"

namespace leo::pipeline {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'E', 'O', '1'};

class Writer {
 public:
  template <class T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.append(b, sizeof(T));
  }
  void str(std::string_view s) {
    put<std::uint64_t>(s.size());
    buf_.append(s);
  }
  void f64s(const std::vector<double>& v) {
    put<std::uint64_t>(v.size());
    for (double x : v) put(x);
  }
  void section(const char tag[4], const Writer& body) {
    buf_.append(tag, 4);
    put<std::uint64_t>(body.buf_.size());
    buf_.append(body.buf_);
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view b, std::string what) : b_(b), what_(std::move(what)) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<double> f64s() {
    const auto n = get<std::uint64_t>();
    need(n * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = get<double>();
    return v;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }
  void expect_done() const {
    if (!done()) throw FormatError(what_ + ": trailing bytes");
  }

 private:
  void need(std::uint64_t n) const {
    if (n > b_.size() - pos_) throw FormatError(what_ + ": truncated");
  }
  std::string_view b_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::uint32_t crc(std::string_view bytes) {
  uLong c = crc32(0L, Z_NULL, 0);
  // crc32 takes a uInt length; feed in chunks to stay within it.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    c = crc32(c, reinterpret_cast<const Bytef*>(bytes.data() + off), n);
    off += n;
  }
  return static_cast<std::uint32_t>(c);
}

}  // namespace

void round_to_float(num::ParameterStore& params) {
  for (auto& p : params) {
    for (auto& v : p.value.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

std::string serialize_model(const ModelArtifact& a) {
  Writer out;
  for (char c : kMagic) out.put(c);
  out.put<std::uint32_t>(kFormatVersion);

  Writer vocab;
  vocab.put<std::uint64_t>(a.vocab.size());
  for (const auto& t : a.vocab.tokens()) vocab.str(t);
  out.section("VOCB", vocab);

  Writer conf;
  const auto entries = config_entries(a.config);
  conf.put<std::uint64_t>(entries.size());
  for (const auto& [k, v] : entries) {
    conf.str(k);
    conf.str(v);
  }
  out.section("CONF", conf);

  Writer tens;
  tens.put<std::uint64_t>(a.params.size());
  for (const auto& p : a.params) {
    tens.str(p.name);
    tens.put<std::uint8_t>(static_cast<std::uint8_t>(p.group));
    tens.put<std::uint32_t>(static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) tens.put<std::uint64_t>(d);
    tens.put<std::uint64_t>(p.pinned_rows.size());
    for (auto r : p.pinned_rows) tens.put<std::uint64_t>(r);
    for (double v : p.value.data()) tens.put<float>(static_cast<float>(v));
  }
  out.section("TENS", tens);

  Writer clst;
  clst.put<std::uint8_t>(a.stats.mode == scoring::ScoringMode::pooled ? 0 : 1);
  clst.put<std::uint64_t>(a.stats.dim);
  clst.put<std::uint64_t>(a.stats.clusters.size());
  for (const auto& c : a.stats.clusters) {
    clst.put<std::uint64_t>(c.count);
    clst.put<double>(c.epsilon);
    clst.f64s(c.mean);
    clst.put<std::uint64_t>(c.inv_cov.rows());
    clst.put<std::uint64_t>(c.inv_cov.cols());
    clst.f64s(c.inv_cov.data());
  }
  out.section("CLST", clst);

  Writer thr;
  thr.put<double>(a.threshold);
  out.section("THRS", thr);

  Writer lg;
  lg.put<std::uint64_t>(a.log.size());
  for (const auto& l : a.log) lg.str(l);
  out.section("LOGD", lg);

  out.put<std::uint32_t>(crc(out.bytes()));
  return std::move(out.bytes());
}

ModelArtifact deserialize_model(std::string_view bytes) {
  if (bytes.size() < 12) throw FormatError("model file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic: not a LEO1 model file");
  Reader head(bytes.substr(4, 4), "header");
  const auto version = head.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version));
  }
  const auto payload = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4), "checksum");
  if (tail.get<std::uint32_t>() != crc(payload)) throw FormatError("checksum mismatch (file corrupt or truncated)");

  ModelArtifact a;
  Reader r(payload.substr(8), "model");
  bool seen_conf = false;
  while (!r.done()) {
    const std::string tag(r.raw(4));
    const auto len = r.get<std::uint64_t>();
    Reader s(r.raw(len), "section " + tag);
    if (tag == "VOCB") {
      std::vector<std::string> tokens(s.get<std::uint64_t>());
      for (auto& t : tokens) t = s.str();
      try {
        a.vocab = code::Vocabulary::from_tokens(std::move(tokens));
      } catch (const Error& e) {
        throw FormatError(std::string("bad vocabulary: ") + e.what());
      }
    } else if (tag == "CONF") {
      const auto n = s.get<std::uint64_t>();
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto k = s.str();
        const auto v = s.str();
        if (k == "seed" && v == "unset") continue;
        try {
          set_value(a.config, k, v);
        } catch (const ConfigError& e) {
          throw FormatError(std::string("bad config entry: ") + e.what());
        }
      }
      seen_conf = true;
    } else if (tag == "TENS") {
      const auto n = s.get<std::uint64_t>();
      for (std::uint64_t i = 0; i < n; ++i) {
        auto name = s.str();
        const auto group = s.get<std::uint8_t>();
        if (group > 2) throw FormatError("bad parameter group in " + name);
        num::Shape shape(s.get<std::uint32_t>());
        for (auto& d : shape) d = s.get<std::uint64_t>();
        std::vector<std::size_t> pinned(s.get<std::uint64_t>());
        for (auto& p : pinned) p = s.get<std::uint64_t>();
        std::vector<double> data(num::shape_size(shape));
        for (auto& v : data) v = static_cast<double>(s.get<float>());
        const auto idx = a.params.add(std::move(name), static_cast<num::ParamGroup>(group),
                                      num::Tensor(std::move(shape), std::move(data)));
        a.params.at(idx).pinned_rows = std::move(pinned);
      }
    } else if (tag == "CLST") {
      a.stats.mode = s.get<std::uint8_t>() == 0 ? scoring::ScoringMode::pooled : scoring::ScoringMode::concat_diagonal;
      a.stats.dim = s.get<std::uint64_t>();
      a.stats.clusters.resize(s.get<std::uint64_t>());
      for (auto& c : a.stats.clusters) {
        c.count = s.get<std::uint64_t>();
        c.epsilon = s.get<double>();
        c.mean = s.f64s();
        const auto rows = s.get<std::uint64_t>();
        const auto cols = s.get<std::uint64_t>();
        c.inv_cov = num::Tensor({rows, cols}, s.f64s());
      }
    } else if (tag == "THRS") {
      a.threshold = s.get<double>();
    } else if (tag == "LOGD") {
      a.log.resize(s.get<std::uint64_t>());
      for (auto& l : a.log) l = s.str();
    } else {
      throw FormatError("unknown section '" + tag + "'");
    }
    s.expect_done();
  }
  if (!seen_conf || a.params.size() == 0) throw FormatError("model file is missing sections");
  return a;
}

void save_model(const ModelArtifact& a, const std::string& path) {
  const std::string bytes = serialize_model(a);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path);
}

ModelArtifact load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace leo::pipeline
