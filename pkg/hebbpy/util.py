from __future__ import print_function, division
import sys
import numpy as np


def task_rng(seed, task_id=None, stream=None):
    """!
    @brief Independent random stream for one run or one parallel task.
    @param seed  int base seed of the run
    @param task_id  int index of the task (grid point, repeat). None for a plain run.
    @param stream  int index of a sub stream of the task (inputs, learning, ...)
    """
    if task_id is None:
        return np.random.RandomState(int(seed))
    if stream is None:
        return np.random.RandomState([int(seed), int(task_id)])
    return np.random.RandomState([int(seed), int(task_id), int(stream)])


def var_box(rng, high, size=None):
    """!
    @brief Draw from the uniform box (0, high).
    Used for the randomized learning rate.
    @param rng  np.random.RandomState
    @param high  float upper bound
    """
    return rng.uniform(low=0.0, high=high, size=size)


def exp_waits(rng, rate, size):
    r"""!
    @brief Exponential waiting times by inverse CDF sampling
    \f[ t = -\ln(1 - u) / r, \quad u \sim U[0, 1) \f]
    @param rng  np.random.RandomState
    @param rate  float or np_1darray of rates > 0
    @param size  int or shape tuple
    """
    u = rng.random_sample(size)
    return -np.log1p(-u) / rate


def is_root(comm=None):
    return comm is None or comm.rank == 0


def log_msg(msg, verbose=1, comm=None):
    """!
    @brief Print a progress message on the root rank only.
    """
    if verbose and is_root(comm):
        print(msg)
        sys.stdout.flush()


def rank_tasks(n_tasks, comm=None):
    """!
    @brief Task ids owned by this rank.  Tasks are split into contiguous
    blocks over the ranks in the same way chains are distributed in a
    parallel DE-MC run.
    """
    all_ids = np.array(range(n_tasks), dtype=int)
    if comm is None or comm.size == 1:
        return all_ids
    return np.array_split(all_ids, comm.size)[comm.rank]


def gather_tasks(local_results, n_tasks, comm=None):
    """!
    @brief Collect (task_id, result) pairs from every rank and merge them by
    task id.  Every rank gets the full ordered list back.
    @param local_results list of (task_id, result)
    """
    if comm is None or comm.size == 1:
        merged = list(local_results)
    else:
        gathered = comm.gather(list(local_results), root=0)
        merged = None
        if comm.rank == 0:
            merged = [item for rank_res in gathered for item in rank_res]
        merged = comm.bcast(merged, root=0)
    merged.sort(key=lambda item: item[0])
    assert len(merged) == n_tasks
    return [res for _, res in merged]
