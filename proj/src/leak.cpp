#include "leakscan/leak.hpp"

namespace leakscan {

std::string leak_kind_label(LeakKind kind) {
    switch (kind) {
        case LeakKind::PI: return "PI";
        case LeakKind::CT: return "CT";
        case LeakKind::BM: return "BM";
    }
    return "PI";
}

LeakKind leak_kind_from_label(const std::string& label) {
    if (label == "PI" || label == "pi") return LeakKind::PI;
    if (label == "CT" || label == "ct") return LeakKind::CT;
    if (label == "BM" || label == "bm") return LeakKind::BM;
    throw ConfigError("unknown leak kind: " + label);
}

LeakRecord LeakRecord::pi(std::string doc_id, std::vector<PiiMatch> evidence) {
    if (evidence.empty()) throw PreconditionError("LeakRecord requires non-empty evidence");
    LeakRecord r;
    r.doc_id = std::move(doc_id);
    r.kind = LeakKind::PI;
    r.pii_evidence = std::move(evidence);
    return r;
}

LeakRecord LeakRecord::windows(std::string doc_id, LeakKind kind,
                               std::vector<MatchWindow> evidence) {
    if (evidence.empty()) throw PreconditionError("LeakRecord requires non-empty evidence");
    if (kind == LeakKind::PI) throw PreconditionError("window evidence is for CT/BM records");
    LeakRecord r;
    r.doc_id = std::move(doc_id);
    r.kind = kind;
    r.window_evidence = std::move(evidence);
    return r;
}

}  // namespace leakscan
