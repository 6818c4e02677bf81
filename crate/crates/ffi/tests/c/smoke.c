#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include "qgraph.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    QgGraph *g = NULL;
    CHECK(qg_graph_new(QG_GRAPH_KIND_DUMBBELL, 2.0, &g) == QG_STATUS_OK);
    size_t edges = 0;
    CHECK(qg_graph_edge_count(g, &edges) == QG_STATUS_OK && edges == 3);

    QgModes *modes = NULL;
    CHECK(qg_dumbbell_modes(2.0, 3.0, &modes) == QG_STATUS_OK);
    int loops = 0;
    for (size_t i = 0; i < qg_modes_len(modes); i++) {
        QgMode m;
        CHECK(qg_modes_get(modes, i, &m) == QG_STATUS_OK);
        if (m.family == QG_MODE_FAMILY_LOOP) {
            CHECK(fabs(m.lambda - (double)((loops + 1) * (loops + 1))) < 1e-12);
            loops++;
        }
    }
    CHECK(loops == 3);
    qg_modes_free(modes);

    size_t count = 0;
    CHECK(qg_bowtie_events(NULL, 0, &count) == QG_STATUS_OK && count == 5);
    QgDstEvent ev[5];
    CHECK(qg_bowtie_events(ev, 5, &count) == QG_STATUS_OK);
    CHECK(ev[0].kind == QG_DST_EVENT_KIND_PITCHFORK && fabs(ev[0].omega + 0.5) < 1e-9);

    QgContinuationSettings s = qg_continuation_settings_default();
    s.lambda_min = -0.5;
    QgBranch *b = NULL;
    CHECK(qg_continue_constant(g, &s, &b) == QG_STATUS_OK);
    CHECK(qg_branch_len(b) > 2);
    size_t bp = (size_t)-1;
    for (size_t i = 0; i < qg_branch_len(b); i++) {
        QgBranchPoint p;
        CHECK(qg_branch_point(b, i, &p) == QG_STATUS_OK);
        if ((p.tags & QG_TAG_BRANCH_POINT) && bp == (size_t)-1) bp = i;
    }
    CHECK(bp != (size_t)-1);
    QgClassification c;
    CHECK(qg_branch_classify(b, bp, 0.0, &c) == QG_STATUS_OK);
    CHECK(c.kind == QG_BIFURCATION_KIND_PITCHFORK);
    qg_branch_free(b);

    s.lambda_min = 0.0;
    s.lambda_max = 0.0;
    CHECK(qg_continue_constant(g, &s, &b) == QG_STATUS_INVALID_ARGUMENT);
    char *msg = qg_last_error_message();
    CHECK(msg != NULL);
    qg_string_free(msg);

    qg_graph_free(g);
    printf("ok %s\n", qg_version());
    return 0;
}
