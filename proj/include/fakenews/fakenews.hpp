#pragma once

#include "fakenews/corpus.hpp"
#include "fakenews/embeddings_io.hpp"
#include "fakenews/error.hpp"
#include "fakenews/eval.hpp"
#include "fakenews/handcrafted.hpp"
#include "fakenews/io.hpp"
#include "fakenews/linear_models.hpp"
#include "fakenews/lsa.hpp"
#include "fakenews/meta_models.hpp"
#include "fakenews/pipeline.hpp"
#include "fakenews/preprocess.hpp"
#include "fakenews/random.hpp"
