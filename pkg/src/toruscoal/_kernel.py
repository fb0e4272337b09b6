"""JIT-compiled Gillespie loop for the spatial coalescent.

One flat kernel advances a replicate's packed state arrays in place. The
acceptance runs push 1e8-1e9 events, so everything on the hot path lives
here; the surrounding API (state setup, event-log objects, statistics) stays
in plain Python.

State layout (n = sample size, M = number of torus sites):
  slot_site[n]   flat site of each block slot, -1 when dead
  slot_min[n]    minimal element (1-based) of the block in each slot
  slot_size[n]   number of sample elements in the block
  elem_slot[n]   element -> slot, -1 once the element's block was killed
  alive_ids/alive_pos  dense list of live slots with positions for O(1) removal
  site_count[M]  blocks per site
  multi_sites/multi_pos  dense list of sites holding >= 2 blocks
  ireg = [n_alive, n_multi, total_events, log_used]
  freg = [clock, block_time_integral]

Event records: kind 0 = migration (a=min elem, b=from, c=to),
kind 1 = merge (a=result min elem, b=site, c=k, mask=participant min elems),
kind 2 = mutation kill (a=min elem, b=site, c=block size).
"""

import numpy as np
from numba import njit

MIG, MERGE, KILL = 0, 1, 2

# ireg indices
N_ALIVE, N_MULTI, EV_TOTAL, LOG_USED = 0, 1, 2, 3
# freg indices
CLOCK, BLOCKTIME = 0, 1

# advance() return codes
DONE, LOG_FULL, BUDGET, ABSORBED, RUNAWAY = 0, 1, 2, 3, 4


@njit(cache=True)
def _site_add(s, site_count, multi_sites, multi_pos, ireg):
    c = site_count[s] + 1
    site_count[s] = c
    if c == 2:
        multi_pos[s] = ireg[N_MULTI]
        multi_sites[ireg[N_MULTI]] = s
        ireg[N_MULTI] += 1


@njit(cache=True)
def _site_remove(s, site_count, multi_sites, multi_pos, ireg):
    c = site_count[s] - 1
    site_count[s] = c
    if c == 1:
        p = multi_pos[s]
        last = multi_sites[ireg[N_MULTI] - 1]
        multi_sites[p] = last
        multi_pos[last] = p
        ireg[N_MULTI] -= 1
        multi_pos[s] = -1


@njit(cache=True)
def _alive_remove(slot, alive_ids, alive_pos, ireg):
    p = alive_pos[slot]
    last = alive_ids[ireg[N_ALIVE] - 1]
    alive_ids[p] = last
    alive_pos[last] = p
    ireg[N_ALIVE] -= 1
    alive_pos[slot] = -1


@njit(cache=True)
def _all_pairs_far(alive_ids, n_alive, slot_site, side, dist2):
    for i in range(n_alive):
        si = slot_site[alive_ids[i]]
        xi = si // side
        yi = si % side
        for j in range(i + 1, n_alive):
            sj = slot_site[alive_ids[j]]
            dx = xi - sj // side
            if dx < 0:
                dx = -dx
            if side - dx < dx:
                dx = side - dx
            dy = yi - sj % side
            if dy < 0:
                dy = -dy
            if side - dy < dy:
                dy = side - dy
            if dx * dx + dy * dy < dist2:
                return False
    return True


@njit(cache=True)
def _log(ireg, ev_time, ev_kind, ev_a, ev_b, ev_c, ev_mask, t, kind, a, b, c, mask):
    i = ireg[LOG_USED]
    ev_time[i] = t
    ev_kind[i] = kind
    ev_a[i] = a
    ev_b[i] = b
    ev_c[i] = c
    ev_mask[i] = mask
    ireg[LOG_USED] = i + 1


@njit(cache=True)
def _apply_merge(
    s, buf, k, n_elems,
    slot_site, slot_min, slot_size, elem_slot,
    alive_ids, alive_pos, site_count, multi_sites, multi_pos, ireg,
):
    """Merge the k slots in buf[:k], all located at site s.

    Returns (winner slot, participant mask of min elements).
    """
    winner = buf[0]
    for i in range(1, k):
        if slot_min[buf[i]] < slot_min[winner]:
            winner = buf[i]
    mask = np.uint64(0)
    total = 0
    for i in range(k):
        slot = buf[i]
        mask |= np.uint64(1) << np.uint64(slot_min[slot] - 1)
        total += slot_size[slot]
        if slot != winner:
            for e in range(n_elems):
                if elem_slot[e] == slot:
                    elem_slot[e] = winner
            _alive_remove(slot, alive_ids, alive_pos, ireg)
            _site_remove(s, site_count, multi_sites, multi_pos, ireg)
            slot_site[slot] = -1
    slot_size[winner] = total
    return winner, mask


@njit(cache=True)
def advance(
    # state
    slot_site, slot_min, slot_size, elem_slot,
    alive_ids, alive_pos, site_count, multi_sites, multi_pos,
    spectrum, ireg, freg,
    # rate tables
    totals, kcum,
    # model parameters
    side, theta, instantaneous,
    # stop conditions
    stop_nblocks, stop_time, stop_on_meeting, stop_dist,
    # budgets
    max_events, event_cap,
    # event log
    log_enabled, ev_time, ev_kind, ev_a, ev_b, ev_c, ev_mask,
    rng,
):
    """Advance the state until a stop condition, budget or log capacity.

    No RNG draws are consumed after the last applied event, so a run can be
    resumed from any return with an unchanged distribution.
    """
    n_elems = elem_slot.shape[0]
    buf = np.empty(64, np.int32)
    dist2 = stop_dist * stop_dist
    applied = 0
    log_cap = ev_time.shape[0]
    while True:
        n_alive = ireg[N_ALIVE]
        if stop_nblocks >= 0 and n_alive <= stop_nblocks:
            return DONE
        if n_alive == 0:
            return ABSORBED
        if stop_on_meeting and ireg[N_MULTI] > 0:
            return DONE
        if stop_dist >= 0.0 and _all_pairs_far(alive_ids, n_alive, slot_site, side, dist2):
            return DONE
        if applied >= max_events:
            return BUDGET
        if ireg[EV_TOTAL] >= event_cap:
            return RUNAWAY
        if log_enabled and ireg[LOG_USED] >= log_cap:
            return LOG_FULL

        # instantaneous mode: any co-located group merges at the current time
        if instantaneous and ireg[N_MULTI] > 0:
            s = multi_sites[0]
            k = 0
            for i in range(n_alive):
                slot = alive_ids[i]
                if slot_site[slot] == s:
                    buf[k] = slot
                    k += 1
            winner, mask = _apply_merge(
                s, buf, k, n_elems, slot_site, slot_min, slot_size, elem_slot,
                alive_ids, alive_pos, site_count, multi_sites, multi_pos, ireg,
            )
            if log_enabled:
                _log(ireg, ev_time, ev_kind, ev_a, ev_b, ev_c, ev_mask,
                     freg[CLOCK], MERGE, slot_min[winner], s, k, mask)
            applied += 1
            ireg[EV_TOTAL] += 1
            continue

        mig = float(n_alive)
        kill = theta * n_alive
        w = 0.0
        if not instantaneous:
            for i in range(ireg[N_MULTI]):
                w += totals[site_count[multi_sites[i]]]
        total_rate = mig + kill + w
        if total_rate <= 0.0:
            return ABSORBED

        dwell = -np.log1p(-rng.random()) / total_rate
        if freg[CLOCK] + dwell >= stop_time:
            # exact by memorylessness: freeze the state at the horizon
            freg[BLOCKTIME] += (stop_time - freg[CLOCK]) * n_alive
            freg[CLOCK] = stop_time
            return DONE
        freg[BLOCKTIME] += dwell * n_alive
        freg[CLOCK] += dwell

        v = rng.random() * total_rate
        if v < kill:
            slot = alive_ids[int(rng.random() * n_alive)]
            s = slot_site[slot]
            size = slot_size[slot]
            spectrum[size] += 1
            if log_enabled:
                _log(ireg, ev_time, ev_kind, ev_a, ev_b, ev_c, ev_mask,
                     freg[CLOCK], KILL, slot_min[slot], s, size, np.uint64(0))
            for e in range(n_elems):
                if elem_slot[e] == slot:
                    elem_slot[e] = -1
            _alive_remove(slot, alive_ids, alive_pos, ireg)
            _site_remove(s, site_count, multi_sites, multi_pos, ireg)
            slot_site[slot] = -1
        elif v < kill + mig:
            slot = alive_ids[int(rng.random() * n_alive)]
            d = int(rng.random() * 4.0)
            old = slot_site[slot]
            x = old // side
            y = old % side
            if d == 0:
                x += 1
                if x == side:
                    x = 0
            elif d == 1:
                x -= 1
                if x < 0:
                    x = side - 1
            elif d == 2:
                y += 1
                if y == side:
                    y = 0
            else:
                y -= 1
                if y < 0:
                    y = side - 1
            new = x * side + y
            if new != old:
                slot_site[slot] = new
                _site_remove(old, site_count, multi_sites, multi_pos, ireg)
                _site_add(new, site_count, multi_sites, multi_pos, ireg)
            if log_enabled:
                _log(ireg, ev_time, ev_kind, ev_a, ev_b, ev_c, ev_mask,
                     freg[CLOCK], MIG, slot_min[slot], old, new, np.uint64(0))
        else:
            v2 = v - kill - mig
            acc = 0.0
            s = multi_sites[ireg[N_MULTI] - 1]
            for i in range(ireg[N_MULTI]):
                st = multi_sites[i]
                acc += totals[site_count[st]]
                if acc > v2:
                    s = st
                    break
            b = site_count[s]
            u2 = rng.random() * totals[b]
            k = b
            for kk in range(2, b + 1):
                if kcum[b, kk] > u2:
                    k = kk
                    break
            cnt = 0
            for i in range(n_alive):
                slot = alive_ids[i]
                if slot_site[slot] == s:
                    buf[cnt] = slot
                    cnt += 1
            # uniform k-subset via partial Fisher-Yates
            for i in range(k):
                j = i + int(rng.random() * (cnt - i))
                tmp = buf[i]
                buf[i] = buf[j]
                buf[j] = tmp
            winner, mask = _apply_merge(
                s, buf, k, n_elems, slot_site, slot_min, slot_size, elem_slot,
                alive_ids, alive_pos, site_count, multi_sites, multi_pos, ireg,
            )
            if log_enabled:
                _log(ireg, ev_time, ev_kind, ev_a, ev_b, ev_c, ev_mask,
                     freg[CLOCK], MERGE, slot_min[winner], s, k, mask)
        applied += 1
        ireg[EV_TOTAL] += 1
