#include "serml/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace serml {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config key '" + std::string(key) + "': bad value '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") {
    return true;
  }
  if (value == "false" || value == "0") {
    return false;
  }
  throw std::invalid_argument("config key '" + std::string(key) + "': expected true/false");
}

}  // namespace

void ModelConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "d") d = parse_number<int>(key, value);
  else if (key == "H") H = parse_number<int>(key, value);
  else if (key == "K") K = parse_number<int>(key, value);
  else if (key == "A") A = parse_number<int>(key, value);
  else if (key == "m") m = parse_number<int>(key, value);
  else if (key == "gamma") gamma = parse_number<double>(key, value);
  else if (key == "rho") rho = parse_number<double>(key, value);
  else if (key == "xi") xi = parse_number<double>(key, value);
  else if (key == "lr") lr = parse_number<double>(key, value);
  else if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "epochs") epochs = parse_number<int>(key, value);
  else if (key == "induction") induction = relinduce::parse_induction(value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "neg_per_pos") neg_per_pos = parse_number<int>(key, value);
  else if (key == "reduction") {
    if (value == "mean") reduction = textenc::Reduction::kMean;
    else if (value == "sum") reduction = textenc::Reduction::kSum;
    else throw std::invalid_argument("config key 'reduction': expected mean or sum");
  }
  else if (key == "patience") patience = parse_number<int>(key, value);
  else if (key == "eval_neg") eval_neg = parse_number<int>(key, value);
  else if (key == "eval_seed") eval_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "rating_head") rating_head = parse_bool(key, value);
  else if (key == "rating_weight") rating_weight = parse_number<double>(key, value);
  else if (key == "stop_grad_semantic") stop_grad_semantic = parse_bool(key, value);
  else if (key == "text_grad_to_embeddings") text_grad_to_embeddings = parse_bool(key, value);
  else if (key == "deterministic") deterministic = parse_bool(key, value);
  else if (key == "init_uniform") init_uniform = parse_number<double>(key, value);
  else if (key == "init_mean") init_mean = parse_number<double>(key, value);
  else if (key == "init_var") init_var = parse_number<double>(key, value);
  else if (key == "adam_beta1") adam_beta1 = parse_number<double>(key, value);
  else if (key == "adam_beta2") adam_beta2 = parse_number<double>(key, value);
  else if (key == "adam_eps") adam_eps = parse_number<double>(key, value);
  else if (key == "max_loss") max_loss = parse_number<double>(key, value);
  else throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::invalid_argument(std::string("invalid config: ") + what);
    }
  };
  require(d >= 1, "d >= 1");
  require(H >= 0 && K >= 1 && A >= 0, "H, A >= 0 and K >= 1");
  require(m >= 1, "m >= 1");
  require(gamma >= 0 && rho >= 0 && xi >= 0, "gamma, rho, xi >= 0");
  require(lr > 0, "lr > 0");
  require(batch_size >= 1, "batch_size >= 1");
  require(epochs >= 0, "epochs >= 0");
  require(neg_per_pos >= 1, "neg_per_pos >= 1");
  require(patience >= 0, "patience >= 0");
  require(eval_neg >= 1, "eval_neg >= 1");
  require(rating_weight >= 0, "rating_weight >= 0");
  require(init_uniform >= 0 && init_var >= 0, "init ranges >= 0");
  require(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0,
          "adam moments in [0, 1), eps > 0");
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "d = " << d << '\n'
      << "H = " << H << '\n'
      << "K = " << K << '\n'
      << "A = " << A << '\n'
      << "m = " << m << '\n'
      << "gamma = " << gamma << '\n'
      << "rho = " << rho << '\n'
      << "xi = " << xi << '\n'
      << "lr = " << lr << '\n'
      << "batch_size = " << batch_size << '\n'
      << "epochs = " << epochs << '\n'
      << "induction = " << relinduce::to_string(induction) << '\n'
      << "seed = " << seed << '\n'
      << "neg_per_pos = " << neg_per_pos << '\n'
      << "reduction = " << (reduction == textenc::Reduction::kMean ? "mean" : "sum") << '\n'
      << "patience = " << patience << '\n'
      << "eval_neg = " << eval_neg << '\n'
      << "eval_seed = " << eval_seed << '\n'
      << "rating_head = " << (rating_head ? "true" : "false") << '\n'
      << "rating_weight = " << rating_weight << '\n'
      << "stop_grad_semantic = " << (stop_grad_semantic ? "true" : "false") << '\n'
      << "text_grad_to_embeddings = " << (text_grad_to_embeddings ? "true" : "false") << '\n'
      << "deterministic = " << (deterministic ? "true" : "false") << '\n'
      << "init_uniform = " << init_uniform << '\n'
      << "init_mean = " << init_mean << '\n'
      << "init_var = " << init_var << '\n'
      << "adam_beta1 = " << adam_beta1 << '\n'
      << "adam_beta2 = " << adam_beta2 << '\n'
      << "adam_eps = " << adam_eps << '\n'
      << "max_loss = " << max_loss << '\n';
  return out.str();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  ModelConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  config.validate();
  return config;
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

ModelConfig desk_profile() {
  ModelConfig c;
  c.d = 16;
  c.K = 16;
  c.batch_size = 64;
  return c;
}

}  // namespace serml
