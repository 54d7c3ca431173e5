#ifndef KREMLITE_BUF7_H
#define KREMLITE_BUF7_H

#include <stdint.h>
#include "kremlite_annot.h"

#endif
