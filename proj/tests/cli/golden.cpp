// Runs every case in tests/golden/cases.txt through the mstat binary and
// compares the report (timing removed) and exit code with the stored
// transcript. `--update` rewrites the transcripts.
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

struct Run {
  std::string out;
  int code = -1;
};

Run run(const std::string& cmd) {
  Run r;
  FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: golden <mstat binary> <repository root> [--update]\n";
    return 2;
  }
  const std::string binary = fs::absolute(argv[1]).string();
  const bool update = argc > 3 && std::string(argv[3]) == "--update";
  fs::current_path(argv[2]);

  std::ifstream cases("tests/golden/cases.txt");
  std::string line;
  int failures = 0, total = 0;
  while (std::getline(cases, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    auto bar = line.find('|');
    const std::string name = trim(line.substr(0, bar)), args = trim(line.substr(bar + 1));
    ++total;
    Run r = run(binary + " " + args);
    nlohmann::ordered_json report;
    try {
      report = nlohmann::ordered_json::parse(r.out);
    } catch (const std::exception& e) {
      std::cout << "FAIL " << name << ": report is not JSON (" << e.what() << ")\n";
      ++failures;
      continue;
    }
    report.erase("timing");
    std::ostringstream text;
    text << "$ mstat " << args << "\n" << "exit " << r.code << "\n" << report.dump(2) << "\n";

    const fs::path golden = "tests/golden/" + name + ".txt";
    if (update) {
      std::ofstream(golden) << text.str();
      continue;
    }
    std::ifstream in(golden);
    std::stringstream want;
    want << in.rdbuf();
    bool ok = in && want.str() == text.str();
    if (report.contains("exit_code") && report["exit_code"] != r.code) ok = false;
    std::cout << (ok ? "ok   " : "FAIL ") << name << "\n";
    if (!ok) {
      ++failures;
      std::cout << "--- expected\n" << want.str() << "--- got\n" << text.str();
    }
  }
  if (update) std::cout << "updated " << total << " transcripts\n";
  else std::cout << total - failures << "/" << total << " transcripts match\n";
  return failures == 0 && total > 0 ? 0 : 1;
}
