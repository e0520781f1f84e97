#pragma once

#include "gseq/block_order.hpp"
#include "gseq/decompose.hpp"
#include "gseq/dissociation.hpp"
#include "gseq/e_order.hpp"
#include "gseq/errors.hpp"
#include "gseq/group.hpp"
#include "gseq/oracle.hpp"
#include "gseq/pipeline.hpp"
#include "gseq/random.hpp"
#include "gseq/rectify.hpp"
#include "gseq/sequencing.hpp"
#include "gseq/serialize.hpp"
