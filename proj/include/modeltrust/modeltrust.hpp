#pragma once

#include "modeltrust/artifact_digest.hpp"
#include "modeltrust/attestation.hpp"
#include "modeltrust/errors.hpp"
#include "modeltrust/gate.hpp"
#include "modeltrust/keys.hpp"
#include "modeltrust/lsri.hpp"
#include "modeltrust/lsri_io.hpp"
#include "modeltrust/merkle.hpp"
#include "modeltrust/policy.hpp"
#include "modeltrust/provenance.hpp"
#include "modeltrust/sha256.hpp"
#include "modeltrust/text_table.hpp"
#include "modeltrust/time.hpp"
#include "modeltrust/transparency_log.hpp"
