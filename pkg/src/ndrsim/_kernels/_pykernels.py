"""Pure-Python kernels. Reference semantics for the compiled twins in _ckernels.pyx.

Both backends must agree bit for bit: loops run in the same order and floats
are accumulated left to right.
"""


def tm_run(next_state, write, move, start, halt, blank, tape_input, budget):
    """Run a deterministic single-tape machine given as integer transition tables.

    Returns ``(halted, steps, state, head, lo, cells)`` where ``cells`` holds
    the symbol codes of positions ``lo .. lo + len(cells) - 1``; this span covers
    the input and every position the head visited. ``head`` is relative to the
    first input cell.
    """
    tape = {i: c for i, c in enumerate(tape_input) if c != blank}
    n = len(tape_input)
    state = start
    head = 0
    lo, hi = 0, n - 1 if n else 0
    steps = 0
    while state != halt and steps < budget:
        sym = tape.get(head, blank)
        ns = next_state[state][sym]
        w = write[state][sym]
        if w == blank:
            tape.pop(head, None)
        else:
            tape[head] = w
        head += move[state][sym]
        state = ns
        steps += 1
        if head < lo:
            lo = head
        elif head > hi:
            hi = head
    cells = [tape.get(i, blank) for i in range(lo, hi + 1)]
    return state == halt, steps, state, head, lo, cells


def answer_codes(true_codes, parent_status, u, s, eta, rho):
    """Noisy answers for a batch of open questions.

    Per row of ``u``: column 0 decides whether the question is solved (< s),
    column 1 whether the answer copies its parent's correctness (< rho, only
    when ``parent_status`` is 0 = parent correct or 1 = parent wrong), column 2
    whether the answer is corrupted (< eta), column 3 which of the three wrong
    valences is used. Returns -1 for unsolved questions, otherwise a valence code.
    """
    if hasattr(u, "tolist"):
        u = u.tolist()
    out = []
    for i in range(len(true_codes)):
        row = u[i]
        if not row[0] < s:
            out.append(-1)
            continue
        ps = parent_status[i]
        if ps >= 0 and row[1] < rho:
            wrong = ps == 1
        else:
            wrong = row[2] < eta
        truth = true_codes[i]
        if wrong:
            j = int(row[3] * 3.0)
            if j > 2:
                j = 2
            out.append(j if j < truth else j + 1)
        else:
            out.append(truth)
    return out


def contains_sum(masks, weights, query):
    """Sum of weights over outcomes whose bitmask contains every bit of ``query``."""
    if hasattr(masks, "tolist"):
        masks = masks.tolist()
    if hasattr(weights, "tolist"):
        weights = weights.tolist()
    acc = 0.0
    for i in range(len(masks)):
        if masks[i] & query == query:
            acc += weights[i]
    return acc


def contains_count(masks, query):
    if hasattr(masks, "tolist"):
        masks = masks.tolist()
    n = 0
    for m in masks:
        if m & query == query:
            n += 1
    return n
