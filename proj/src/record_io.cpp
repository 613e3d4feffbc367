#include "statcal/record_io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

namespace statcal {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return {buf, res.ptr};
}

std::string format_shortest(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string format_csv(const RunRecord& record) {
  const Index l = record.final_theta.size();
  std::string out = "t";
  for (Index j = 0; j < l; ++j) out += ",theta_" + std::to_string(j);
  out += ",grad_norm,J_hat\n";
  for (const auto& p : record.points) {
    out += format_double(p.t);
    for (Index j = 0; j < p.theta.size(); ++j) out += "," + format_double(p.theta[j]);
    out += "," + format_double(p.grad_norm) + "," + format_double(p.j_hat) + "\n";
  }
  return out;
}

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

}  // namespace

std::string format_jsonl(const RunRecord& record) {
  std::string out;
  for (const auto& p : record.points) {
    nlohmann::json j;
    j["t"] = number(p.t);
    j["theta"] = nlohmann::json::array();
    for (Index k = 0; k < p.theta.size(); ++k) j["theta"].push_back(number(p.theta[k]));
    j["grad_norm"] = number(p.grad_norm);
    j["J_hat"] = number(p.j_hat);
    j["warming"] = p.warming;
    j["fourth_moment"] = number(p.fourth_moment);
    out += j.dump() + "\n";
  }
  const RunDiagnostics& d = record.diagnostics;
  nlohmann::json diag;
  diag["max_fourth_moment"] = number(d.max_fourth_moment);
  diag["moment_warning"] = d.moment_warning;
  diag["warming_steps"] = d.warming_steps;
  diag["sign_flips"] = d.sign_flips;
  if (d.divergence) {
    diag["divergence"] = {{"step", d.divergence->step},
                          {"particle", d.divergence->particle},
                          {"message", d.divergence->message}};
  }
  out += nlohmann::json{{"diagnostics", diag}}.dump() + "\n";
  return out;
}

std::string format_record(const RunRecord& record, RecordFormat format) {
  return format == RecordFormat::csv ? format_csv(record) : format_jsonl(record);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace statcal
