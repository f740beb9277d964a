"""Modules over the generalized preprojective algebra Pi(C, D).

A Pi-module is double-quiver data: for every pair (i, j) of the orientation
there is a forward matrix (source j, target i) and a reversed one, each
satisfying its own eps-commutation relation, plus the mesh relation at every
vertex k:

    sum_j sgn(k, j) sum_{s < a_kj} eps_k^s A_the-in-arrow A_the-out-arrow eps_k^{a_kj-1-s} = 0,

with sgn(k, j) = +1 when (k, j) lies in the orientation and -1 otherwise
(the sign split of the potential).  The orientation enters only through
these signs; E-filtered and crystal predicates, fac/sub partitions and the
homological routines below do not depend on it.
"""

from __future__ import annotations

import random

from . import cartan, grassmann, hmod, linalg
from .errors import (
    InternalMismatchError,
    NotLocallyFreeError,
    SearchBudgetExceededError,
    SpecMismatchError,
    UndefinedValueError,
)
from .fields import PrimeField


class PiModule(hmod.HModule):
    """Same storage as HModule; the arrow dict carries both directions."""


def double_arrow_keys(spec):
    keys = []
    for (i, j, k) in spec.arrow_keys():
        keys.append((i, j, k))
        keys.append((j, i, k))
    return sorted(keys)


def pi_zero_module(spec) -> PiModule:
    n = spec.datum.n
    return PiModule(spec, (0,) * n, [[] for _ in range(n)],
                    {k: [] for k in double_arrow_keys(spec)})


def pi_simple(spec, i) -> PiModule:
    return from_h_module(hmod.generalized_simple(spec, i))


def from_h_module(M: hmod.HModule) -> PiModule:
    """View an H-module as a Pi-module with vanishing reversed arrows."""
    field = M.field()
    arrows = {k: linalg.copy_mat(m) for k, m in M.arrows.items()}
    for (i, j, k) in M.spec.arrow_keys():
        arrows[(j, i, k)] = linalg.zeros(field, M.dims[j], M.dims[i])
    return PiModule(M.spec, M.dims, M.eps, arrows)


def restrict_to_h(M: PiModule) -> hmod.HModule:
    arrows = {k: linalg.copy_mat(M.arrows[k]) for k in M.spec.arrow_keys()}
    return hmod.HModule(M.spec, M.dims, M.eps, arrows)


def mesh_terms(spec, k):
    """(sign, in-key, out-key, s, a-1-s) tuples listing the mesh sum at k."""
    out = []
    datum = spec.datum
    for j in datum.neighbors(k):
        sgn = 1 if (k, j) in spec.omega.pairs else -1
        a = spec.rel_powers(k, j)[0]
        for cp in range(datum.g[k][j]):
            for s in range(a):
                out.append((sgn, (k, j, cp), (j, k, cp), s, a - 1 - s))
    return out


def mesh_matrix(M: PiModule, k):
    field = M.field()
    d = M.dims[k]
    total = linalg.zeros(field, d, d)
    powers = [linalg.identity(field, d)]
    c = M.spec.datum.D[k]
    for _ in range(c):
        powers.append(linalg.mat_mul(field, M.eps[k], powers[-1]))
    for sgn, key_in, key_out, s, t in mesh_terms(M.spec, k):
        if M.dims[key_in[1]] == 0:
            continue  # the composite factors through a zero space
        term = linalg.mat_mul(field, powers[s],
                              linalg.mat_mul(field, M.arrows[key_in],
                                             linalg.mat_mul(field, M.arrows[key_out],
                                                            powers[t])))
        if sgn < 0:
            term = linalg.mat_neg(field, term)
        total = linalg.mat_add(field, total, term)
    return total


def check_pi_relations(M: PiModule) -> list:
    """eps nilpotence, both directed commutations, and the mesh at every vertex."""
    violations = hmod.check_relations(M)
    field = M.field()
    for k in range(M.spec.datum.n):
        if M.dims[k] == 0:
            continue
        mesh = mesh_matrix(M, k)
        if any(x != field.zero for row in mesh for x in row):
            violations.append(f"mesh relation fails at vertex {k + 1}")
    return violations


# --- fac / sub --------------------------------------------------------------


def _partition_from_ranks(ranks):
    counts = [ranks[t - 1] - ranks[t] for t in range(1, len(ranks))]
    partition = []
    for t in range(len(counts), 0, -1):
        mult = counts[t - 1] - (counts[t] if t < len(counts) else 0)
        partition.extend([t] * mult)
    return tuple(sorted((x for x in partition if x > 0), reverse=True))


def in_image_space(M, k):
    """Basis of Im(M_{k,in}) = H_k-span of all incoming arrow columns."""
    field = M.field()
    c = M.spec.datum.D[k]
    vectors = []
    powers = [linalg.identity(field, M.dims[k])]
    for _ in range(c - 1):
        powers.append(linalg.mat_mul(field, M.eps[k], powers[-1]))
    for key, A in M.arrows.items():
        (tgt, src, _) = key
        if tgt != k or M.dims[src] == 0 or M.dims[k] == 0:
            continue
        for col in range(M.dims[src]):
            base = [A[r][col] for r in range(M.dims[k])]
            for t in range(c):
                vectors.append(linalg.mat_vec(field, powers[t], base))
    return linalg.row_space(field, vectors)


def sub_space(M, k):
    """Basis of Ker(M_{k,out}), the largest H_k-stable joint kernel of the
    arrows leaving k."""
    return grassmann.allowed_bottom_space(M, k)


def fac_sub(M, k):
    """(fac_k, sub_k) as Jordan partitions of eps_k on cokernel and kernel."""
    field = M.field()
    d = M.dims[k]
    if d == 0:
        return (), ()
    c = M.spec.datum.D[k]
    w = in_image_space(M, k)
    w_rank = len(w)
    powers = [linalg.identity(field, d)]
    for _ in range(c):
        powers.append(linalg.mat_mul(field, M.eps[k], powers[-1]))
    fac_ranks = [d - w_rank]
    for t in range(1, c + 1):
        cols = [[powers[t][r][s] for r in range(d)] for s in range(d)]
        fac_ranks.append(linalg.rank(field, list(w) + cols) - w_rank)
    fac = _partition_from_ranks(fac_ranks)
    s_basis = sub_space(M, k)
    sub_ranks = [len(s_basis)]
    for t in range(1, c + 1):
        imgs = [linalg.mat_vec(field, powers[t], b) for b in s_basis]
        sub_ranks.append(linalg.rank(field, imgs) if imgs else 0)
    sub = _partition_from_ranks(sub_ranks)
    return fac, sub


# --- crystal modules --------------------------------------------------------


def kernel_of_fac(M, j) -> PiModule:
    """K_j(M): the submodule with Im(M_{j,in}) at j and everything elsewhere."""
    field = M.field()
    n = M.spec.datum.n
    subspaces = []
    for v in range(n):
        if v == j:
            subspaces.append(in_image_space(M, j))
        else:
            subspaces.append(linalg.identity(field, M.dims[v]))
    return hmod.submodule_from_subspaces(M, subspaces)


def cokernel_of_sub(M, j) -> PiModule:
    """C_j(M) = M / sub_j(M)."""
    n = M.spec.datum.n
    subspaces = [sub_space(M, j) if v == j else [] for v in range(n)]
    return hmod.quotient_by_subspaces(M, subspaces)


def _is_free_partition(partition, c):
    return all(part == c for part in partition)


def is_crystal_module(M: PiModule, _memo=None) -> bool:
    """fac_j and sub_j free for all j, recursively on K_j and C_j.

    Children equal to M itself (fac_j = 0 or sub_j = 0) are skipped; the
    recursion descends only along strictly smaller modules, so it terminates.
    """
    if _memo is None:
        _memo = {}
    key = M.key()
    if key in _memo:
        return _memo[key]
    _memo[key] = True  # tentatively, for self-referential skips
    if M.total_dim() == 0:
        return True
    datum = M.spec.datum
    for j in range(datum.n):
        fac, sub = fac_sub(M, j)
        if not _is_free_partition(fac, datum.D[j]) or not _is_free_partition(sub, datum.D[j]):
            _memo[key] = False
            return False
    for j in range(datum.n):
        fac, sub = fac_sub(M, j)
        if sum(fac):
            child = kernel_of_fac(M, j)
            if child.total_dim() < M.total_dim() and not is_crystal_module(child, _memo):
                _memo[key] = False
                return False
        if sum(sub):
            child = cokernel_of_sub(M, j)
            if child.total_dim() < M.total_dim() and not is_crystal_module(child, _memo):
                _memo[key] = False
                return False
    _memo[key] = True
    return True


def phi(M: PiModule, i) -> int:
    """Multiplicity of E_i in sub_i(M); defined when sub_i is free."""
    _, sub = fac_sub(M, i)
    if not _is_free_partition(sub, M.spec.datum.D[i]):
        raise UndefinedValueError(f"sub_{i + 1} is not a free H-module")
    return len(sub)


def phi_star(M: PiModule, i) -> int:
    fac, _ = fac_sub(M, i)
    if not _is_free_partition(fac, M.spec.datum.D[i]):
        raise UndefinedValueError(f"fac_{i + 1} is not a free H-module")
    return len(fac)


# --- E-filtered search ------------------------------------------------------


def is_E_filtered(M: PiModule, budget=100000, seed=0):
    """(flag, witness): search for a flag with generalized-simple subquotients.

    Bottom-factor generators are enumerated exhaustively over a prime field
    when the candidate space is small, otherwise by a 64-sample randomized
    sweep (and always randomized over the rationals), so a False answer is
    certified only on the exhaustive path.  Budget exhaustion raises
    SearchBudgetExceededError: the answer is then unknown, never False.
    """
    field = M.field()
    rng = random.Random(seed)
    state = {"budget": budget}

    def candidates(current, j):
        space = sub_space(current, j)
        c = current.spec.datum.D[j]
        if not space:
            return [], True
        if isinstance(field, PrimeField):
            count = grassmann.count_free_submodules_of_type(
                _restriction_type(current, j, space), 1, field.p, c)
            if count == 0:
                return [], True
            if count <= 512:
                return list(grassmann.iter_free_rank1_generators(
                    field, current.eps[j], space, c)), True
        # randomized sweep over the candidate space
        out = []
        eps_top = linalg.mat_pow(field, current.eps[j], c - 1)
        for _ in range(64):
            coeffs = [field.from_int(rng.randrange(field.size())
                                     if field.size() else rng.randint(-4, 4))
                      for _ in space]
            u = [field.zero] * current.dims[j]
            for coeff, b in zip(coeffs, space):
                if coeff != field.zero:
                    for t in range(len(u)):
                        u[t] = field.add(u[t], field.mul(coeff, b[t]))
            if any(x != field.zero for x in linalg.mat_vec(field, eps_top, u)):
                out.append(u)
        return out, False

    def _restriction_type(current, j, space):
        c = current.spec.datum.D[j]
        ranks = [len(space)]
        power = linalg.identity(field, current.dims[j])
        for t in range(1, c + 1):
            power = linalg.mat_mul(field, current.eps[j], power)
            imgs = [linalg.mat_vec(field, power, b) for b in space]
            ranks.append(linalg.rank(field, imgs) if imgs else 0)
        return _partition_from_ranks(ranks)

    def search(current):
        if current.total_dim() == 0:
            return []
        for j in range(current.spec.datum.n):
            if current.dims[j] == 0:
                continue
            cands, _ = candidates(current, j)
            c = current.spec.datum.D[j]
            for u in cands:
                state["budget"] -= 1
                if state["budget"] < 0:
                    raise SearchBudgetExceededError(budget)
                span = [u]
                for _ in range(c - 1):
                    span.append(linalg.mat_vec(field, current.eps[j], span[-1]))
                subspaces = [span if v == j else [] for v in range(current.spec.datum.n)]
                quotient = hmod.quotient_by_subspaces(current, subspaces)
                rest = search(quotient)
                if rest is not None:
                    return [j] + rest
        return None

    witness = search(M)
    return (witness is not None), witness


# --- random E-filtered generation -------------------------------------------


def _coupled_module(A, B, couplings):
    """Block module [[A, Y], [0, B]] from coupling blocks Y per eps/arrow."""
    field = A.field()
    n = A.spec.datum.n
    dims = [A.dims[v] + B.dims[v] for v in range(n)]
    eps = []
    for v in range(n):
        m = linalg.zeros(field, dims[v], dims[v])
        hmod._insert_block(m, A.eps[v], 0, 0)
        hmod._insert_block(m, B.eps[v], A.dims[v], A.dims[v])
        hmod._insert_block(m, couplings[("eps", v)], 0, A.dims[v])
        eps.append(m)
    arrows = {}
    for key in A.arrows:
        (i, j, _) = key
        m = linalg.zeros(field, dims[i], dims[j])
        hmod._insert_block(m, A.arrows[key], 0, 0)
        hmod._insert_block(m, B.arrows[key], A.dims[i], A.dims[j])
        hmod._insert_block(m, couplings[("arrow", key)], 0, A.dims[j])
        arrows[key] = m
    return PiModule(A.spec, dims, eps, arrows)


def _extension_below(A, B, rng):
    """Random extension 0 -> A -> N -> B -> 0 of Pi-modules (A at the bottom)."""
    field = A.field()
    n = A.spec.datum.n
    slots = []
    for v in range(n):
        slots.append((("eps", v), A.dims[v], B.dims[v]))
    for key in A.arrows:
        (i, j, _) = key
        slots.append((("arrow", key), A.dims[i], B.dims[j]))

    def zero_couplings():
        return {name: linalg.zeros(field, r, c) for (name, r, c) in slots}

    def residual_vector(module):
        out = []
        datum = module.spec.datum
        for v in range(n):
            if module.dims[v]:
                power = linalg.mat_pow(field, module.eps[v], datum.D[v])
                out.extend(x for row in power for x in row)
        for key, mat in sorted(module.arrows.items()):
            (i, j, _) = key
            if module.dims[i] and module.dims[j]:
                a, b = module.spec.rel_powers(i, j)
                lhs = linalg.mat_mul(field, linalg.mat_pow(field, module.eps[i], a), mat)
                rhs = linalg.mat_mul(field, mat, linalg.mat_pow(field, module.eps[j], b))
                out.extend(field.sub(x, y) for r1, r2 in zip(lhs, rhs) for x, y in zip(r1, r2))
        for v in range(n):
            if module.dims[v]:
                out.extend(x for row in mesh_matrix(module, v) for x in row)
        return out

    unknown_index = []
    for (name, r, c) in slots:
        for a in range(r):
            for b in range(c):
                unknown_index.append((name, a, b))
    if not unknown_index:
        return _coupled_module(A, B, zero_couplings())
    columns = []
    for (name, a, b) in unknown_index:
        coup = zero_couplings()
        coup[name][a][b] = field.one
        columns.append(residual_vector(_coupled_module(A, B, coup)))
    rows = [[columns[u][t] for u in range(len(columns))] for t in range(len(columns[0]))]
    basis = linalg.nullspace(field, rows, len(unknown_index))
    coup = zero_couplings()
    for vec in basis:
        coeff = field.from_int(rng.randrange(field.size())
                               if field.size() else rng.randint(-3, 3))
        if coeff == field.zero:
            continue
        for (name, a, b), x in zip(unknown_index, vec):
            if x != field.zero:
                coup[name][a][b] = field.add(coup[name][a][b], field.mul(coeff, x))
    module = _coupled_module(A, B, coup)
    if check_pi_relations(module):
        raise InternalMismatchError("extension violates relations")
    return module


def random_E_filtered(spec, type_sequence, seed) -> PiModule:
    """Iterated random extensions below generalized simples; the output is
    E-filtered by construction with witness = type_sequence (bottom first)."""
    rng = random.Random(seed)
    seq = list(type_sequence)
    if not seq:
        return pi_zero_module(spec)
    current = pi_simple(spec, seq[-1])
    for i in reversed(seq[:-1]):
        current = _extension_below(pi_simple(spec, i), current, rng)
    current = hmod.normalize_eps(current)
    if check_pi_relations(current):
        raise InternalMismatchError("random E-filtered module violates relations")
    return current


# --- Hom and Ext over Pi ----------------------------------------------------


def hom_pi(M: PiModule, N: PiModule) -> int:
    return hmod.hom_dim(M, N)


def ext1_pi(M: PiModule, N: PiModule) -> int:
    """dim Ext^1_Pi(M, N) from the bimodule-resolution presentation.

    Hom(-, N) applied to Pi(x)M -> Pi(x)B(x)M -> Pi(x)M -> M -> 0 computes
    Ext^1 as ker(d2*)/im(d1*); for finite-dimensional locally free modules
    the result is cross-checked against the symmetrized Hom formula.
    """
    if M.spec != N.spec:
        raise SpecMismatchError("ext needs a common algebra spec")
    rk_m = hmod.is_locally_free(M)
    if rk_m is None:
        raise NotLocallyFreeError("ext1_pi requires locally free first argument")
    field = M.field()
    n = M.spec.datum.n
    vertex_bases = hmod._vertex_hom_bases(M, N)
    vertex_mats = [
        [hmod._sparse_to_matrix(field, e, N.dims[v], M.dims[v]) for e in vertex_bases[v]]
        for v in range(n)
    ]
    arrow_keys = sorted(M.arrows)
    y1_bases = {}
    for key in arrow_keys:
        (i, j, _) = key
        a, b = M.spec.rel_powers(i, j)
        _, basis = hmod._relation_space_dim(field, N.eps[i], M.eps[j], a, b)
        y1_bases[key] = basis
    y1_dim = sum(len(b) for b in y1_bases.values())
    # d1*:  (f_v) -> (A^N f_j - f_i A^M)_arrows
    d1_cols = []
    for v in range(n):
        for fmat in vertex_mats[v]:
            col = []
            for key in arrow_keys:
                (i, j, _) = key
                block = linalg.zeros(field, N.dims[i], M.dims[j])
                if v == j and N.dims[j]:
                    block = linalg.mat_mul(field, N.arrows[key], fmat)
                if v == i and M.dims[i]:
                    block = linalg.mat_sub(field, block,
                                           linalg.mat_mul(field, fmat, M.arrows[key]))
                col.extend(x for row in block for x in row)
            d1_cols.append(col)
    rank_d1 = linalg.rank(field, d1_cols) if d1_cols else 0
    # d2*:  (G_a) -> per vertex  sum sgn [eps^s A^N_in G_out eps^t + eps^s G_in A^M_out eps^t]
    pow_n = [[linalg.identity(field, N.dims[v])] for v in range(n)]
    pow_m = [[linalg.identity(field, M.dims[v])] for v in range(n)]
    for v in range(n):
        cmax = M.spec.datum.D[v]
        for _ in range(cmax):
            pow_n[v].append(linalg.mat_mul(field, N.eps[v], pow_n[v][-1]))
            pow_m[v].append(linalg.mat_mul(field, M.eps[v], pow_m[v][-1]))

    def d2_image(psi):
        out = []
        for v in range(n):
            res = linalg.zeros(field, N.dims[v], M.dims[v])
            if N.dims[v] and M.dims[v]:
                for sgn, key_in, key_out, s, t in mesh_terms(M.spec, v):
                    j = key_in[1]
                    terms = []
                    if N.dims[j]:
                        terms.append(linalg.mat_mul(
                            field, pow_n[v][s],
                            linalg.mat_mul(field, N.arrows[key_in],
                                           linalg.mat_mul(field, psi[key_out],
                                                          pow_m[v][t]))))
                    if M.dims[j]:
                        terms.append(linalg.mat_mul(
                            field, pow_n[v][s],
                            linalg.mat_mul(field, psi[key_in],
                                           linalg.mat_mul(field, M.arrows[key_out],
                                                          pow_m[v][t]))))
                    for term in terms:
                        if sgn < 0:
                            term = linalg.mat_neg(field, term)
                        res = linalg.mat_add(field, res, term)
            out.extend(x for row in res for x in row)
        return out

    d2_cols = []
    for key in arrow_keys:
        (i, j, _) = key
        for vec in y1_bases[key]:
            psi = {k2: linalg.zeros(field, N.dims[k2[0]], M.dims[k2[1]]) for k2 in arrow_keys}
            mat = psi[key]
            for p_ in range(N.dims[i]):
                for q in range(M.dims[j]):
                    x = vec[p_ * M.dims[j] + q]
                    if x != field.zero:
                        mat[p_][q] = x
            d2_cols.append(d2_image(psi))
    rank_d2 = linalg.rank(field, d2_cols) if d2_cols else 0
    ext = (y1_dim - rank_d2) - rank_d1
    rk_n = hmod.is_locally_free(N)
    if rk_n is not None:
        expected = hom_pi(M, N) + hom_pi(N, M) - cartan.symmetric_form(
            M.spec.datum, rk_m, rk_n)
        if ext != expected:
            raise InternalMismatchError(
                f"presentation Ext={ext} disagrees with symmetrized-Hom formula={expected}")
    return ext


# --- serialization ----------------------------------------------------------


def pi_module_to_json(M: PiModule) -> str:
    import json

    fs = M.spec.fieldspec
    fwd = [k for k in sorted(M.arrows) if k in set(M.spec.arrow_keys())]
    rev = [k for k in sorted(M.arrows) if k not in set(M.spec.arrow_keys())]

    def block(keys):
        return [{"target": k[0] + 1, "source": k[1] + 1, "copy": k[2],
                 "matrix": [[hmod._entry_to_json(fs, x) for x in row] for row in M.arrows[k]]}
                for k in keys]

    obj = {
        "field": fs.to_json(),
        "dims": list(M.dims),
        "eps": [[[hmod._entry_to_json(fs, x) for x in row] for row in m] for m in M.eps],
        "arrows": block(fwd),
        "arrows_reversed": block(rev),
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def pi_module_from_json(spec, text: str) -> PiModule:
    import json

    obj = json.loads(text)
    from .fields import FieldSpec
    fs = FieldSpec.from_json(obj["field"])
    if fs != spec.fieldspec:
        raise SpecMismatchError("field of serialized module differs from spec")
    dims = obj["dims"]
    eps = [[[hmod._entry_from_json(fs, x) for x in row] for row in m] for m in obj["eps"]]
    arrows = {}
    for rec in obj["arrows"] + obj["arrows_reversed"]:
        key = (rec["target"] - 1, rec["source"] - 1, rec["copy"])
        arrows[key] = [[hmod._entry_from_json(fs, x) for x in row] for row in rec["matrix"]]
    return PiModule(spec, dims, eps, arrows)
