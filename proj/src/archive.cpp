#include "sbelkit/archive.hpp"

#include <bit>
#include <cstring>

#include "sbelkit/io.hpp"

namespace sbelkit::archive {

namespace {

constexpr std::string_view kDtype = "f64le";

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::string& out, std::string_view s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}

  std::string_view take(std::size_t n, const char* what) {
    if (n > b_.size() - pos_)
      throw ArchiveTruncatedError(std::string("model archive truncated while reading ") + what);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T get(const char* what) {
    auto s = take(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  std::string str(const char* what) { return std::string(take(get<std::uint32_t>(what), what)); }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace

nlohmann::ordered_json shape_json(const model::ModelShape& s) {
  nlohmann::ordered_json j;
  j["vocab_size"] = s.vocab_size;
  j["dim"] = s.dim;
  j["blocks"] = s.blocks;
  j["ffn_mult"] = s.ffn_mult;
  j["max_seq_len"] = s.max_seq_len;
  return j;
}

model::ModelShape shape_from_json(const nlohmann::ordered_json& j) {
  model::ModelShape s;
  s.vocab_size = j.at("vocab_size").get<std::size_t>();
  s.dim = j.at("dim").get<std::size_t>();
  s.blocks = j.at("blocks").get<std::size_t>();
  s.ffn_mult = j.at("ffn_mult").get<std::size_t>();
  s.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  return s;
}

std::string serialize_model(const ModelArchive& a) {
  const auto& p = a.model.params;
  nlohmann::ordered_json h;
  h["role"] = a.role;
  h["shape"] = shape_json(p.shape);
  h["function_weights"] = a.model.weights;
  h["mask_function_loss_on_negative"] = a.model.mask_function_loss_on_negative;
  if (a.vocab) h["vocab"] = a.vocab->tokens();
  h["config"] = a.config;
  const std::string header = h.dump();

  std::string out(kMagic);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, header.size());
  out += header;
  const auto tensors = p.tensors();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_str(out, t.name);
    put_str(out, kDtype);
    put_le<std::uint32_t>(out, 2);
    put_le<std::uint64_t>(out, t.tensor->rows);
    put_le<std::uint64_t>(out, t.tensor->cols);
  }
  for (const auto& t : tensors)
    for (double v : t.tensor->data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

ModelArchive parse_model(std::string_view bytes, const std::optional<model::ModelShape>& expected) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic)
    throw ArchiveVersionError("not a model archive (bad magic)");
  Reader r(bytes.substr(kMagic.size()));
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion)
    throw ArchiveVersionError("unsupported model archive version " + std::to_string(version));

  const auto header_len = r.get<std::uint64_t>("header length");
  nlohmann::ordered_json h;
  try {
    h = nlohmann::ordered_json::parse(r.take(header_len, "header"));
  } catch (const nlohmann::json::exception& e) {
    throw ArchiveVersionError(std::string("unreadable model archive header: ") + e.what());
  }

  ModelArchive a;
  model::ModelShape shape;
  try {
    a.role = h.at("role").get<std::string>();
    shape = shape_from_json(h.at("shape"));
    const auto w = h.at("function_weights").get<std::vector<double>>();
    if (w.size() != model::kNumFunctions) throw ArchiveShapeError("archive has wrong number of function weights");
    std::copy(w.begin(), w.end(), a.model.weights.begin());
    a.model.mask_function_loss_on_negative = h.at("mask_function_loss_on_negative").get<bool>();
    if (h.contains("vocab")) a.vocab = vocab::Vocabulary::from_tokens(h["vocab"].get<std::vector<std::string>>());
    if (h.contains("config")) a.config = h["config"];
  } catch (const nlohmann::json::exception& e) {
    throw ArchiveVersionError(std::string("malformed model archive header: ") + e.what());
  }
  if (expected && !(*expected == shape))
    throw ArchiveShapeError("archive shape (dim " + std::to_string(shape.dim) + ", vocab " +
                            std::to_string(shape.vocab_size) + ") does not match the configured model (dim " +
                            std::to_string(expected->dim) + ", vocab " + std::to_string(expected->vocab_size) + ")");
  if (a.vocab && a.vocab->size() != shape.vocab_size)
    throw ArchiveShapeError("archive vocabulary size does not match its embedding table");

  a.model.params = model::Params::zeros(shape);
  auto tensors = a.model.params.tensors();
  const auto count = r.get<std::uint32_t>("manifest size");
  if (count != tensors.size())
    throw ArchiveShapeError("archive lists " + std::to_string(count) + " tensors, expected " +
                            std::to_string(tensors.size()));
  for (auto& t : tensors) {
    const std::string name = r.str("tensor name");
    const std::string dtype = r.str("dtype");
    const auto ndim = r.get<std::uint32_t>("rank");
    if (name != t.name) throw ArchiveShapeError("archive tensor '" + name + "' where '" + t.name + "' expected");
    if (dtype != kDtype) throw ArchiveVersionError("unsupported tensor dtype " + dtype);
    if (ndim != 2) throw ArchiveShapeError("tensor " + name + " has rank " + std::to_string(ndim));
    const auto rows = r.get<std::uint64_t>("shape");
    const auto cols = r.get<std::uint64_t>("shape");
    if (rows != t.tensor->rows || cols != t.tensor->cols)
      throw ArchiveShapeError("tensor " + name + " is " + std::to_string(rows) + "x" + std::to_string(cols) +
                              ", expected " + std::to_string(t.tensor->rows) + "x" +
                              std::to_string(t.tensor->cols));
  }
  for (auto& t : tensors)
    for (double& v : t.tensor->data) v = std::bit_cast<double>(r.get<std::uint64_t>("tensor payload"));
  if (!r.done()) throw ArchiveShapeError("trailing bytes after tensor payloads");
  return a;
}

void save_model(const std::filesystem::path& path, const ModelArchive& a) {
  io::write_file_atomic(path, serialize_model(a));
}

ModelArchive load_model(const std::filesystem::path& path, const std::optional<model::ModelShape>& expected) {
  return parse_model(io::read_file(path), expected);
}

}  // namespace sbelkit::archive
