#include "serml/corpus.hpp"

#include "binary_io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

namespace serml::corpus {
namespace {

constexpr char kSplitMagic[9] = "SERMLSPL";
constexpr std::uint32_t kSplitVersion = 1;

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  for (const auto& line : lines) {
    if (line.find('\n') != std::string::npos) {
      throw std::invalid_argument("identifier contains a newline: " + line);
    }
    out << line << '\n';
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    out.push_back(line);
  }
  return out;
}

void write_split(const std::filesystem::path& path, std::span<const Record> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  detail::put_magic(out, kSplitMagic);
  detail::put<std::uint32_t>(out, kSplitVersion);
  detail::put<std::uint64_t>(out, records.size());
  for (const auto& r : records) {
    detail::put<std::int32_t>(out, r.user);
    detail::put<std::int32_t>(out, r.item);
    detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(r.rating));
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(r.doc.sentences.size()));
    for (const auto& sentence : r.doc.sentences) {
      detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(sentence.size()));
      for (auto token : sentence) {
        detail::put<std::int32_t>(out, token);
      }
    }
  }
}

std::vector<Record> read_split(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  detail::expect_magic(in, kSplitMagic, path.string());
  if (detail::get<std::uint32_t>(in) != kSplitVersion) {
    throw std::runtime_error(path.string() + ": unsupported split file version");
  }
  const auto n = detail::get<std::uint64_t>(in);
  std::vector<Record> records;
  records.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Record r;
    r.user = detail::get<std::int32_t>(in);
    r.item = detail::get<std::int32_t>(in);
    r.rating = detail::get<std::uint8_t>(in);
    const auto n_sent = detail::get<std::uint32_t>(in);
    r.doc.sentences.resize(n_sent);
    for (auto& sentence : r.doc.sentences) {
      sentence.resize(detail::get<std::uint32_t>(in));
      for (auto& token : sentence) {
        token = detail::get<std::int32_t>(in);
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_lines(dir / "users.txt", data.users);
  write_lines(dir / "items.txt", data.items);
  const auto tokens = data.vocab.tokens();
  write_lines(dir / "vocab.txt", tokens.subspan(2));
  for (auto s : {Split::kTrain, Split::kValid, Split::kTest}) {
    write_split(dir / (std::string(split_name(s)) + ".bin"), data.split(s));
  }
  std::ofstream manifest(dir / "manifest.json");
  manifest << nlohmann::json::parse(data.manifest_json()).dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream manifest_in(dir / "manifest.json");
  if (!manifest_in) {
    throw std::runtime_error("missing manifest.json in " + dir.string());
  }
  const auto manifest = nlohmann::json::parse(manifest_in);

  Dataset data;
  data.seed = manifest.at("seed").get<std::uint64_t>();
  data.kcore = manifest.at("kcore").get<int>();
  data.r_max = manifest.at("r_max").get<int>();
  data.min_freq = manifest.at("min_freq").get<int>();
  data.users = read_lines(dir / "users.txt");
  data.items = read_lines(dir / "items.txt");
  TextCaps caps{manifest.at("max_sentences").get<int>(), manifest.at("max_words").get<int>()};
  data.vocab = Vocabulary(read_lines(dir / "vocab.txt"), caps);
  if (data.vocab.size() != manifest.at("vocab_size").get<std::size_t>()) {
    throw std::runtime_error("vocab.txt does not match manifest vocab_size");
  }
  for (auto s : {Split::kTrain, Split::kValid, Split::kTest}) {
    data.split(s) = read_split(dir / (std::string(split_name(s)) + ".bin"));
    for (const auto& r : data.split(s)) {
      if (r.user < 0 || static_cast<std::size_t>(r.user) >= data.users.size() || r.item < 0 ||
          static_cast<std::size_t>(r.item) >= data.items.size()) {
        throw std::runtime_error("split file references unknown user or item");
      }
    }
  }
  return data;
}

}  // namespace serml::corpus
