#include <stdio.h>
#include "qst.h"

int main(void) {
    QstChainParams chain = qst_chain_params_default();
    chain.n_sites = 4;
    QstPropagatorSet *set = NULL;
    if (qst_propagator_set_new(&chain, &set) != QST_STATUS_OK) {
        fprintf(stderr, "%s\n", qst_last_error());
        return 1;
    }
    size_t seq[3] = {0, 15, 7};
    double f[3];
    if (qst_sequence_profile(set, seq, 3, f) != QST_STATUS_OK) return 2;

    QstGaParams ga = qst_ga_params_default();
    ga.population_size = 32;
    ga.num_parents = 4;
    ga.generations = 3;
    ga.workers = 1;
    QstOptimizationResult *res = NULL;
    if (qst_ga_run(set, &ga, &res) != QST_STATUS_OK) return 3;
    double best = -1.0;
    qst_result_best_fidelity(res, &best);
    qst_result_free(res);

    chain.n_sites = 0;
    QstPropagatorSet *bad = NULL;
    if (qst_propagator_set_new(&chain, &bad) != QST_STATUS_INVALID_CONFIG || bad) return 4;

    qst_propagator_set_free(set);
    printf("%.17g %.6f %s\n", f[2], best, qst_last_error());
    return 0;
}
