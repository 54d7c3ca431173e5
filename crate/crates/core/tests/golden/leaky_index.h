#ifndef KREMLITE_LEAKY_INDEX_H
#define KREMLITE_LEAKY_INDEX_H

#include <stdint.h>
#include "kremlite_annot.h"

extern int32_t get_key(void);

#endif
