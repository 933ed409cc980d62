#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sal/adam.hpp"
#include "sal/dataset.hpp"
#include "sal/model.hpp"
#include "sal/util.hpp"

namespace sal {

// Checkpoint file (binary, little-endian):
//   magic "SALCKPT\x01"
//   u32 version (1)
//   string  config JSON echo
//   i64     epoch
//   u32 rng-stream count, then per stream: string name, string state
//   u32 group count, then per group: string name, u32 param count, then per
//       param: string name, u64 rows, u64 cols, raw doubles row-major
//   u32 optimizer count, then per optimizer: string name, i64 steps, u32
//       slot count, then per slot: string param name, two moment matrices
//       (u64 rows, u64 cols, raw doubles each)
// Strings are u64 length + bytes.  Round trips are bit-exact.

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'L', 'C', 'K', 'P', 'T', '\x01'};

namespace detail {

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const char* what) {
  const auto n = read_pod<std::uint64_t>(is, what);
  require(n < (1ull << 30), "implausible string length reading ", what);
  std::string s(static_cast<std::size_t>(n), '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  require(is.good(), "truncated input while reading ", what);
  return s;
}

inline void write_mat(std::ostream& os, const nn::Mat& m) {
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) write_pod<double>(os, m(i, j));
}

inline void read_mat_into(std::istream& is, nn::Mat& m, const std::string& name) {
  const auto rows = read_pod<std::uint64_t>(is, name.c_str());
  const auto cols = read_pod<std::uint64_t>(is, name.c_str());
  require(rows == static_cast<std::uint64_t>(m.rows()) &&
              cols == static_cast<std::uint64_t>(m.cols()),
          "checkpoint shape mismatch for '", name, "': file has ", rows, "x", cols,
          ", model expects ", m.rows(), "x", m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = read_pod<double>(is, name.c_str());
}

}  // namespace detail

struct CheckpointMeta {
  std::string config_json;
  std::int64_t epoch = 0;
  std::map<std::string, std::string> rng_states;
};

inline void save_checkpoint(const std::filesystem::path& path, SalModel& model,
                            std::map<std::string, Adam*> optimizers, const CheckpointMeta& meta) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open checkpoint for writing: ", path.string());
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_pod<std::uint32_t>(os, 1);
  detail::write_string(os, meta.config_json);
  detail::write_pod<std::int64_t>(os, meta.epoch);

  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(meta.rng_states.size()));
  for (const auto& [name, state] : meta.rng_states) {
    detail::write_string(os, name);
    detail::write_string(os, state);
  }

  auto groups = model.parameter_groups();
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(groups.size()));
  for (auto& [gname, params] : groups) {
    detail::write_string(os, gname);
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
    for (nn::Param* p : params) {
      detail::write_string(os, p->name);
      detail::write_mat(os, p->value);
    }
  }

  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(optimizers.size()));
  for (auto& [oname, opt] : optimizers) {
    detail::write_string(os, oname);
    detail::write_pod<std::int64_t>(os, opt->steps_taken());
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(opt->num_params()));
    for (std::size_t i = 0; i < opt->num_params(); ++i) {
      detail::write_string(os, opt->param(i)->name);
      detail::write_mat(os, opt->first_moment(i));
      detail::write_mat(os, opt->second_moment(i));
    }
  }
  require(os.good(), "write failed for checkpoint: ", path.string());
}

// Reads only the config echo (to rebuild a model before a full load).
inline CheckpointMeta peek_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open checkpoint: ", path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  require(is.good() && std::equal(magic, magic + 8, kCheckpointMagic),
          "bad magic in checkpoint: ", path.string());
  const auto version = detail::read_pod<std::uint32_t>(is, "checkpoint version");
  require(version == 1, "unsupported checkpoint version ", version);
  CheckpointMeta meta;
  meta.config_json = detail::read_string(is, "config echo");
  meta.epoch = detail::read_pod<std::int64_t>(is, "epoch");
  const auto n_rng = detail::read_pod<std::uint32_t>(is, "rng stream count");
  for (std::uint32_t i = 0; i < n_rng; ++i) {
    std::string name = detail::read_string(is, "rng stream name");
    meta.rng_states[name] = detail::read_string(is, "rng stream state");
  }
  return meta;
}

// Loads parameters and optimizer state into an already-built model whose
// architecture matches the file.  Returns the metadata block.
inline CheckpointMeta load_checkpoint(const std::filesystem::path& path, SalModel& model,
                                      std::map<std::string, Adam*> optimizers) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open checkpoint: ", path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  require(is.good() && std::equal(magic, magic + 8, kCheckpointMagic),
          "bad magic in checkpoint: ", path.string());
  const auto version = detail::read_pod<std::uint32_t>(is, "checkpoint version");
  require(version == 1, "unsupported checkpoint version ", version);
  CheckpointMeta meta;
  meta.config_json = detail::read_string(is, "config echo");
  meta.epoch = detail::read_pod<std::int64_t>(is, "epoch");
  const auto n_rng = detail::read_pod<std::uint32_t>(is, "rng stream count");
  for (std::uint32_t i = 0; i < n_rng; ++i) {
    std::string name = detail::read_string(is, "rng stream name");
    meta.rng_states[name] = detail::read_string(is, "rng stream state");
  }

  auto groups = model.parameter_groups();
  const auto n_groups = detail::read_pod<std::uint32_t>(is, "group count");
  require(n_groups == groups.size(), "checkpoint has ", n_groups, " parameter groups, model has ",
          groups.size());
  for (auto& [gname, params] : groups) {
    const std::string fname = detail::read_string(is, "group name");
    require(fname == gname, "checkpoint group order mismatch: file '", fname, "' vs model '",
            gname, "'");
    const auto n_params = detail::read_pod<std::uint32_t>(is, "param count");
    require(n_params == params.size(), "group '", gname, "': checkpoint has ", n_params,
            " params, model has ", params.size());
    for (nn::Param* p : params) {
      const std::string pname = detail::read_string(is, "param name");
      require(pname == p->name, "param name mismatch in group '", gname, "': file '", pname,
              "' vs model '", p->name, "'");
      detail::read_mat_into(is, p->value, pname);
    }
  }

  const auto n_opts = detail::read_pod<std::uint32_t>(is, "optimizer count");
  require(n_opts == optimizers.size(), "checkpoint has ", n_opts, " optimizers, caller passed ",
          optimizers.size());
  for (auto& [oname, opt] : optimizers) {
    const std::string fname = detail::read_string(is, "optimizer name");
    require(fname == oname, "optimizer order mismatch: file '", fname, "' vs '", oname, "'");
    opt->set_steps_taken(detail::read_pod<std::int64_t>(is, "optimizer steps"));
    const auto n_slots = detail::read_pod<std::uint32_t>(is, "optimizer slot count");
    require(n_slots == opt->num_params(), "optimizer '", oname, "': checkpoint has ", n_slots,
            " slots, optimizer has ", opt->num_params());
    for (std::size_t i = 0; i < opt->num_params(); ++i) {
      const std::string pname = detail::read_string(is, "optimizer slot name");
      require(pname == opt->param(i)->name, "optimizer slot mismatch in '", oname, "': file '",
              pname, "' vs '", opt->param(i)->name, "'");
      detail::read_mat_into(is, opt->first_moment(i), pname + "/m");
      detail::read_mat_into(is, opt->second_moment(i), pname + "/v");
    }
  }
  return meta;
}

}  // namespace sal
