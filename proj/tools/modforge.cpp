// modforge: validate module libraries, export assemblies as URDF, count and
// search module compositions against tasks, and benchmark model generation.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "modforge/search.hpp"
#include "modforge/urdf.hpp"

namespace {

using modforge::Assembly;
using modforge::ModuleSet;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

std::shared_ptr<const ModuleSet> load_modules(const std::string& path,
                                              const std::string& assets) {
  return std::make_shared<const ModuleSet>(
      modforge::parse_module_set(read_file(path), assets.empty() ? std::filesystem::path()
                                                                 : std::filesystem::path(assets)));
}

int run(int argc, char** argv) {
  CLI::App app{"modular robot assembly modeling, URDF export and composition search"};
  app.require_subcommand(1);

  std::string modules_path, assets_dir, assembly_path, task_path, out_path, robot_name;
  int joints = 0, links = 0, dof = 6;
  std::uint64_t seed = 0;
  int jobs = 1, bench_n = 1000;
  bool early_stop = false, include_single_joint = false;

  CLI::App* validate = app.add_subcommand("validate", "parse and validate a module set");
  validate->add_option("--modules", modules_path, "module set JSON")->required();
  validate->add_option("--assets", assets_dir, "asset root for mesh paths");

  CLI::App* export_urdf = app.add_subcommand("export-urdf", "write the URDF of an assembly");
  export_urdf->add_option("--modules", modules_path)->required();
  export_urdf->add_option("--assets", assets_dir);
  export_urdf->add_option("--assembly", assembly_path, "assembly JSON")->required();
  export_urdf->add_option("--out", out_path, "output URDF path")->required();
  export_urdf->add_option("--name", robot_name, "robot name (default: assembly set id)");

  CLI::App* count = app.add_subcommand("count", "closed-form assembly count");
  count->add_option("--joints", joints, "number of joint modules");
  count->add_option("--links", links, "number of link modules");
  count->add_option("--modules", modules_path, "derive counts from a module set");
  count->add_option("--dof", dof, "maximum degrees of freedom")->required();

  CLI::App* search = app.add_subcommand("search", "brute-force search over compositions");
  search->add_option("--modules", modules_path)->required();
  search->add_option("--assets", assets_dir);
  search->add_option("--task", task_path, "task JSON")->required();
  search->add_option("--max-dof", dof, "maximum degrees of freedom");
  search->add_option("--seed", seed, "random seed");
  search->add_option("--jobs", jobs, "worker threads");
  search->add_option("--out", out_path, "also write results (JSON lines) to a file");
  search->add_flag("--early-stop", early_stop,
                   "stop at the first feasible module-count stratum");
  search->add_flag("--include-single-joint", include_single_joint,
                   "also enumerate base+joint+eef chains");

  CLI::App* bench = app.add_subcommand("bench", "URDF generation latency benchmark");
  bench->add_option("--modules", modules_path)->required();
  bench->add_option("--assets", assets_dir);
  bench->add_option("--n", bench_n, "number of assemblies");
  bench->add_option("--dof", dof, "degrees of freedom per assembly");
  bench->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // 0 covers --help and --version
  }

  if (*validate) {
    try {
      auto set = load_modules(modules_path, assets_dir);
      std::cout << "OK, " << set->modules.size() << " modules\n";
    } catch (const std::exception& e) {
      std::cerr << "validation failed: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  if (*export_urdf) {
    try {
      auto set = load_modules(modules_path, assets_dir);
      Assembly a = modforge::parse_assembly(read_file(assembly_path), set);
      const std::string name = robot_name.empty() ? set->id : robot_name;
      write_file(out_path, modforge::write_xml(modforge::generate_urdf(a, name)));
      std::cout << out_path << "\n";
    } catch (const std::exception& e) {
      std::cerr << "export failed: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  if (*count) {
    try {
      if (!modules_path.empty()) {
        auto spec = modforge::classify_modules(load_modules(modules_path, assets_dir), dof,
                                               include_single_joint);
        std::cout << modforge::chain_count(spec) << "\n";
      } else {
        if (joints < 1) throw std::invalid_argument("--joints (or --modules) is required");
        std::cout << modforge::count_assemblies(joints, links, dof) << "\n";
      }
    } catch (const std::exception& e) {
      std::cerr << "count failed: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  if (*search) {
    try {
      auto set = load_modules(modules_path, assets_dir);
      auto spec = modforge::classify_modules(set, dof, include_single_joint);
      modforge::Task task = modforge::parse_task(read_file(task_path));
      modforge::SearchOptions opts;
      opts.rng_seed = seed;
      opts.jobs = jobs;
      opts.early_stop = early_stop;
      auto results = modforge::brute_force_search(spec, task, opts);
      std::ostringstream lines;
      for (std::size_t i = 0; i < results.size(); ++i) {
        nlohmann::json line;
        line["rank"] = i + 1;
        line["modules"] = results[i].chain;
        line["moduleCount"] = results[i].module_count;
        line["jointCount"] = results[i].joint_count;
        line["feasible"] = true;
        lines << line.dump() << "\n";
      }
      std::cout << lines.str();
      if (!out_path.empty()) write_file(out_path, lines.str());
      std::cerr << results.size() << " feasible assemblies\n";
    } catch (const std::exception& e) {
      std::cerr << "search failed: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  if (*bench) {
    try {
      auto set = load_modules(modules_path, assets_dir);
      auto spec = modforge::classify_modules(set, dof, false);
      // Sample uniformly within the maximal-dof stratum.
      const std::uint64_t below = modforge::count_assemblies(
          static_cast<int>(spec.joint_ids.size()), static_cast<int>(spec.link_ids.size()),
          std::max(1, dof - 1)).convert_to<std::uint64_t>();
      const std::uint64_t total = modforge::chain_count(spec).convert_to<std::uint64_t>();
      if (total == below) throw std::invalid_argument("no chains at the requested dof");
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::uint64_t> pick(below, total - 1);

      std::vector<double> millis;
      millis.reserve(static_cast<std::size_t>(bench_n));
      std::size_t total_bytes = 0;
      for (int i = 0; i < bench_n; ++i) {
        auto chain = modforge::decode_chain(spec, pick(rng));
        Assembly a = Assembly::from_serial_modules(spec.set, chain);
        const auto start = std::chrono::steady_clock::now();
        const std::string xml = modforge::write_xml(modforge::generate_urdf(a, "bench"));
        const auto stop = std::chrono::steady_clock::now();
        millis.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
        total_bytes += xml.size();
      }
      std::sort(millis.begin(), millis.end());
      double mean = 0.0;
      for (double v : millis) mean += v;
      mean /= static_cast<double>(millis.size());
      auto pct = [&](double p) {
        return millis[static_cast<std::size_t>(p * (millis.size() - 1))];
      };
      std::printf("assemblies: %d (dof %d)\n", bench_n, dof);
      std::printf("mean: %.4f ms  p50: %.4f ms  p95: %.4f ms  p99: %.4f ms\n", mean, pct(0.50),
                  pct(0.95), pct(0.99));
      std::printf("urdf bytes total: %zu\n", total_bytes);
    } catch (const std::exception& e) {
      std::cerr << "bench failed: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
