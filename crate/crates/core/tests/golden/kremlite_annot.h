#ifndef KREMLITE_ANNOT_H
#define KREMLITE_ANNOT_H

#define KRML_ANNOT_READ(p) ((void)0)
#define KRML_ANNOT_WRITE(p) ((void)0)
#define KRML_ANNOT_BR(c) ((void)0)

#endif
