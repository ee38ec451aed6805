#include <stdio.h>
#include <string.h>
#include "face_affect.h"

int main(void) {
    double a[] = {0.61, 0.72, 0.55, 0.68, 0.70};
    double b[] = {0.41, 0.52, 0.47, 0.38};
    FaTTest t;
    if (fa_t_test(a, 5, b, 4, false, &t) != FA_STATUS_OK) return 1;
    if (t.df != 7.0 || !(t.t > 0.0) || !(t.p > 0.0 && t.p < 0.01)) return 2;

    FaDetector *det = NULL;
    if (fa_detector_new(3, &det) != FA_STATUS_CONFIG || det != NULL) return 3;
    if (strlen(fa_last_error_message()) == 0) return 4;

    unsigned char gray[64 * 64 * 3];
    memset(gray, 128, sizeof gray);
    if (fa_detector_new(20, &det) != FA_STATUS_OK) return 5;
    FaFace faces[2];
    size_t n = 99;
    if (fa_detect(det, gray, 64, 64, 64 * 3, faces, 2, &n) != FA_STATUS_OK || n != 0) return 6;
    fa_detector_free(det);
    printf("ok %s %.6f\n", fa_version(), t.p);
    return 0;
}
