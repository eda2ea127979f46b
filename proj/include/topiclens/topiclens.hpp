#ifndef TOPICLENS_TOPICLENS_HPP
#define TOPICLENS_TOPICLENS_HPP

#include "common.hpp"
#include "text.hpp"
#include "corpus.hpp"
#include "embedding.hpp"
#include "knn.hpp"
#include "umap.hpp"
#include "hdbscan.hpp"
#include "topics.hpp"
#include "labeling.hpp"
#include "themes.hpp"
#include "report.hpp"
#include "config.hpp"
#include "pipeline.hpp"

#endif
