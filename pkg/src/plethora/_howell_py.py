"""Reference Howell-form kernel over the local ring Z/p^M (plain Python ints)."""


def _val(x, p):
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def howell_rows(rows, ncols, p, M):
    """Return (rows, pivot_cols) of the Howell normal form of the row span."""
    mod = p ** M
    pool = []
    for r in rows:
        r = [x % mod for x in r]
        if any(r):
            pool.append(r)
    out = []
    pivcols = []
    for c in range(ncols):
        best = -1
        bv = M
        for i, r in enumerate(pool):
            x = r[c]
            if x:
                v = _val(x, p)
                if v < bv:
                    best, bv = i, v
                    if v == 0:
                        break
        if best < 0:
            continue
        piv = pool.pop(best)
        pk = p ** bv
        u = piv[c] // pk
        uinv = pow(u, -1, mod)
        piv = [(x * uinv) % mod for x in piv]
        nxt = []
        for r in pool:
            x = r[c]
            if x:
                q = x // pk
                r = [(y - q * z) % mod for y, z in zip(r, piv)]
                if not any(r):
                    continue
            nxt.append(r)
        if bv:
            s = [(x * p ** (M - bv)) % mod for x in piv]
            if any(s):
                nxt.append(s)
        pool = nxt
        out.append(piv)
        pivcols.append(c)
    for i, c in enumerate(pivcols):
        piv = out[i]
        pk = piv[c]
        for j in range(i):
            rj = out[j]
            q = rj[c] // pk
            if q:
                out[j] = [(y - q * z) % mod for y, z in zip(rj, piv)]
    return out, pivcols
