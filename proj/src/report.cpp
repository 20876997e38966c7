#include "conekit/report.hpp"

#include <cstdio>
#include <sstream>

#include <openssl/evp.h>

namespace conekit {

using nlohmann::json;

std::string problem_digest(const ProblemDef& p) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(p.source.data(), p.source.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

json to_json(const RunReport& r) {
    json o = {{"schema", kReportSchema},
              {"tool", {{"name", "conekit"}, {"version", kToolVersion}}},
              {"problem", {{"digest", "sha256:" + r.digest}}},
              {"wall_time", r.wall_time}};
    if (r.constants) o["constants"] = to_json(*r.constants);
    if (!r.conditions.empty()) {
        o["conditions"] = json::array();
        for (const auto& c : r.conditions) o["conditions"].push_back(to_json(c));
    }
    if (r.verdict) {
        json v = to_json(*r.verdict);
        // The rung checks already sit under "conditions".
        if (r.conditions.size() == r.verdict->conditions.size()) v.erase("conditions");
        o["verdict"] = v;
    }
    if (r.search || !r.solutions.empty()) {
        json s = {{"solutions", json::array()}};
        for (const auto& x : r.solutions) s["solutions"].push_back(summary_json(x));
        if (r.search) {
            s["seeds"] = r.search->seeds;
            s["diverged"] = r.search->diverged;
            s["unconverged"] = r.search->unconverged;
        }
        o["solve"] = s;
    }
    return o;
}

std::string solution_csv(const SolveResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "t,u,v\n";
    for (std::size_t n = 0; n < r.u.size(); ++n) os << r.u.nodes()[n] << ',' << r.u.values()[n] << ',' << r.v.values()[n] << '\n';
    return os.str();
}

}  // namespace conekit
