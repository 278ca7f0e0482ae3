#pragma once

#include "baseline.hpp"
#include "decoder.hpp"
#include "engine_setting.hpp"
#include "fkm.hpp"
#include "mf.hpp"

namespace metacf {

/// Engine-agnostic entry point used by the harness and the CLI.
inline CompletedMatrix complete(const PerformanceMatrix& masked, const EngineSetting& setting) {
    switch (setting.engine) {
        case Engine::baseline:
            validate(setting);
            return complete_baseline(masked);
        case Engine::fkm:
            return complete_fkm(masked, setting);
        case Engine::mf:
            return complete_mf(masked, setting);
        case Engine::nlpca:
            return complete_nlpca(masked, setting);
        case Engine::ubp:
            return complete_ubp(masked, setting);
    }
    throw ArgumentError("unknown engine");
}

}  // namespace metacf
