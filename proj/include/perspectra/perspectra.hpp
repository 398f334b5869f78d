#ifndef PERSPECTRA_PERSPECTRA_HPP
#define PERSPECTRA_PERSPECTRA_HPP

#include "perspectra/config.hpp"
#include "perspectra/corpus.hpp"
#include "perspectra/embedding.hpp"
#include "perspectra/error.hpp"
#include "perspectra/llmio.hpp"
#include "perspectra/mipro0.hpp"
#include "perspectra/perspective.hpp"
#include "perspectra/prf.hpp"
#include "perspectra/promptkit.hpp"
#include "perspectra/sftprep.hpp"
#include "perspectra/spaneval.hpp"
#include "perspectra/spanid.hpp"
#include "perspectra/stem.hpp"
#include "perspectra/summeval.hpp"
#include "perspectra/tokenize.hpp"
#include "perspectra/unicode.hpp"

#endif
