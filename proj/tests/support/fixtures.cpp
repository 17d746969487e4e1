#include "fixtures.hpp"

#include "appforge/util/fs.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

namespace appforge::testing {

fs::path fixture_dir() { return APPFORGE_FIXTURE_DIR; }

fs::path store_dir(const std::string& name) { return fixture_dir() / "stores" / name; }

TempDir::TempDir(const std::string& prefix) : path_(util::make_temp_dir(prefix)) {}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

struct ProcInfo {
  int pid = 0;
  int ppid = 0;
  char state = '?';
};

std::vector<ProcInfo> process_table() {
  std::vector<ProcInfo> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator("/proc", ec)) {
    const auto name = entry.path().filename().string();
    if (name.empty() || name.find_first_not_of("0123456789") != std::string::npos) continue;
    std::ifstream in(entry.path() / "stat");
    std::string line;
    if (!std::getline(in, line)) continue;
    // pid (comm) state ppid ...; comm may hold spaces, so parse after the last ')'.
    const auto close = line.rfind(')');
    if (close == std::string::npos) continue;
    std::istringstream rest(line.substr(close + 1));
    ProcInfo p;
    p.pid = std::stoi(name);
    rest >> p.state >> p.ppid;
    out.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<int> live_descendants() {
  const auto table = process_table();
  std::multimap<int, const ProcInfo*> children;
  for (const auto& p : table) children.emplace(p.ppid, &p);
  std::vector<int> out;
  std::vector<int> frontier{static_cast<int>(::getpid())};
  while (!frontier.empty()) {
    const int parent = frontier.back();
    frontier.pop_back();
    auto [a, b] = children.equal_range(parent);
    for (auto it = a; it != b; ++it) {
      if (it->second->state != 'Z') out.push_back(it->second->pid);
      frontier.push_back(it->second->pid);
    }
  }
  return out;
}

std::vector<int> processes_with_cwd_under(const fs::path& root) {
  std::vector<int> out;
  std::error_code ec;
  const auto base = fs::weakly_canonical(root, ec).string();
  for (const auto& p : process_table()) {
    if (p.state == 'Z') continue;
    const auto cwd = fs::read_symlink(fs::path("/proc") / std::to_string(p.pid) / "cwd", ec);
    if (ec) continue;
    const auto s = cwd.string();
    if (s == base || s.rfind(base + "/", 0) == 0) out.push_back(p.pid);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> tree_contents(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& rel : util::list_files(root)) out.emplace_back(rel, util::read_file(root / rel));
  return out;
}

}  // namespace appforge::testing
