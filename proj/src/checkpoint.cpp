#include "climrl/nn/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "climrl/error.hpp"

namespace climrl::nn {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void expect_key(std::istream& in, const std::string& key) {
  std::string got;
  if (!(in >> got) || got != key) {
    throw IoError("checkpoint: expected '" + key + "', found '" + got + "'");
  }
}

std::vector<double> read_doubles(std::istream& in, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string tok;
    if (!(in >> tok)) throw IoError("checkpoint: truncated value list");
    try {
      out[i] = std::stod(tok);
    } catch (const std::exception&) {
      throw IoError("checkpoint: bad number '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Mlp& net) {
  const MlpSpec& s = net.spec();
  out << "climrl-mlp " << kCheckpointVersion << "\n";
  out << "layers " << s.layer_sizes.size();
  for (std::size_t n : s.layer_sizes) out << ' ' << n;
  out << "\nactivation " << to_string(s.activation) << "\nhead " << to_string(s.head) << "\n";
  out << "bounds " << s.low.size();
  for (std::size_t i = 0; i < s.low.size(); ++i) out << ' ' << fmt(s.low[i]) << ' ' << fmt(s.high[i]);
  out << "\nfinal_layer_scale " << fmt(s.final_layer_scale) << "\nlog_std_init "
      << fmt(s.log_std_init) << "\n";
  const auto flat = net.flat_parameters();
  out << "params " << flat.size() << "\n";
  for (double v : flat) out << fmt(v) << "\n";
  if (!out) throw IoError("checkpoint: write failed");
}

Mlp read_checkpoint(std::istream& in) {
  expect_key(in, "climrl-mlp");
  int version = 0;
  if (!(in >> version)) throw IoError("checkpoint: missing version");
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  }
  MlpSpec s;
  expect_key(in, "layers");
  std::size_t n = 0;
  if (!(in >> n) || n < 2 || n > 64) throw IoError("checkpoint: bad layer count");
  s.layer_sizes.resize(n);
  for (auto& v : s.layer_sizes) {
    if (!(in >> v)) throw IoError("checkpoint: bad layer size");
  }
  std::string word;
  expect_key(in, "activation");
  in >> word;
  try {
    s.activation = activation_from_string(word);
    expect_key(in, "head");
    in >> word;
    s.head = head_from_string(word);
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  expect_key(in, "bounds");
  std::size_t nb = 0;
  if (!(in >> nb)) throw IoError("checkpoint: bad bounds count");
  const auto b = read_doubles(in, 2 * nb);
  for (std::size_t i = 0; i < nb; ++i) {
    s.low.push_back(b[2 * i]);
    s.high.push_back(b[2 * i + 1]);
  }
  expect_key(in, "final_layer_scale");
  s.final_layer_scale = read_doubles(in, 1)[0];
  expect_key(in, "log_std_init");
  s.log_std_init = read_doubles(in, 1)[0];
  expect_key(in, "params");
  std::size_t count = 0;
  if (!(in >> count)) throw IoError("checkpoint: bad parameter count");
  RngStream rng(0);
  Mlp net(s, rng);
  if (count != net.parameter_count()) throw IoError("checkpoint: parameter count mismatch");
  net.set_flat_parameters(read_doubles(in, count));
  return net;
}

void save_checkpoint(const std::string& path, const Mlp& net) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    write_checkpoint(out, net);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename checkpoint to '" + path + "': " + ec.message());
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace climrl::nn
