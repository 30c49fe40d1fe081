"""Independent reference implementations used to cross-check the package.

Everything here is straight-line scalar Python (loops over floats) so it
shares no code path with the vectorized implementations under test.
"""

import math


def scalar_embed(input_map, x_row):
    v, q = len(input_map), len(x_row)
    return [sum(input_map[i][j] * x_row[j] for j in range(q)) for i in range(v)]


def scalar_forward(input_map, weights, biases, dt, x_row):
    """All states of one sample as plain lists, y_0 .. y_K."""
    y = scalar_embed(input_map, x_row)
    v = len(y)
    states = [list(y)]
    for w_k, b_k in zip(weights, biases):
        field = []
        for i in range(v):
            a = sum(w_k[i][j] * y[j] for j in range(v)) + b_k[i]
            field.append(a if a > 0.0 else 0.0)
        y = [y[i] + dt * field[i] for i in range(v)]
        states.append(list(y))
    return states


def scalar_logits(cls_w, cls_b, y):
    return [sum(cls_w[i][j] * y[j] for j in range(len(y))) + cls_b[i]
            for i in range(len(cls_b))]


def scalar_softmax(z):
    top = max(z)
    e = [math.exp(zi - top) for zi in z]
    s = sum(e)
    return [ei / s for ei in e]


def scalar_cross_entropy(z, label_row):
    top = max(z)
    lse = top + math.log(sum(math.exp(zi - top) for zi in z))
    return lse - sum(zi * ci for zi, ci in zip(z, label_row))


def scalar_loss(params, dt, beta_layer, beta_out, xs, labels):
    """Mean cross-entropy plus Tikhonov terms, all via scalar loops.

    ``params`` is a dict with keys input_map, weights, biases, cls_w, cls_b
    holding nested lists.
    """
    total = 0.0
    for x_row, label_row in zip(xs, labels):
        y = scalar_forward(params["input_map"], params["weights"],
                           params["biases"], dt, x_row)[-1]
        z = scalar_logits(params["cls_w"], params["cls_b"], y)
        total += scalar_cross_entropy(z, label_row)
    total /= len(xs)
    layer_sq = sum(w * w for w_k in params["weights"] for row in w_k for w in row)
    layer_sq += sum(b * b for b_k in params["biases"] for b in b_k)
    out_sq = sum(w * w for row in params["cls_w"] for w in row)
    out_sq += sum(b * b for b in params["cls_b"])
    out_sq += sum(w * w for row in params["input_map"] for w in row)
    return total + beta_layer * layer_sq + beta_out * out_sq


def params_as_lists(pv):
    return {
        "input_map": pv.input_map.tolist(),
        "weights": pv.layer_weights.tolist(),
        "biases": pv.layer_biases.tolist(),
        "cls_w": pv.classifier_weights.tolist(),
        "cls_b": pv.classifier_bias.tolist(),
    }


def central_differences(f, flat, h=1e-6):
    """Componentwise central finite differences of a scalar function."""
    grad = []
    for i in range(len(flat)):
        up = list(flat)
        dn = list(flat)
        up[i] += h
        dn[i] -= h
        grad.append((f(up) - f(dn)) / (2.0 * h))
    return grad


class QuadraticObjective:
    """Separable convex quadratic over a ParamVector, plus a linear term.

    value(theta) = 0.5 * sum_i curvature_i * (theta_i - target_i)^2
                   + <coupling, theta>
    Exposes the same ``value``/``gradient`` interface as the network
    objective, so it can stand in for it inside the V-cycle.
    """

    def __init__(self, spec, curvature, target, coupling=None):
        self.spec = spec
        self.curvature = curvature
        self.target = target
        self.coupling = coupling

    def value(self, theta):
        from mlresnet.net import ParamVector  # local to keep the oracle standalone

        d = theta.ravel() - self.target.ravel()
        v = 0.5 * float((self.curvature.ravel() * d) @ d)
        if self.coupling is not None:
            v += self.coupling.dot(theta)
        return v

    def gradient(self, theta):
        from mlresnet.net import ParamVector

        d = theta.ravel() - self.target.ravel()
        g = ParamVector.from_ravel(self.curvature.ravel() * d, self.spec)
        if self.coupling is not None:
            g = g + self.coupling
        return self.value(theta), g

    def exact_minimizer(self):
        from mlresnet.net import ParamVector

        flat = self.target.ravel()
        if self.coupling is not None:
            flat = flat - self.coupling.ravel() / self.curvature.ravel()
        return ParamVector.from_ravel(flat, self.spec)


def quadratic_family(hierarchy, rng):
    """Per-level quadratics consistent under the transfer operators.

    The finest curvature/target are random; coarser ones come from the
    same restrictions the V-cycle applies (pair sums for curvatures, pair
    averages for targets), mirroring a Galerkin-style coarse model.
    """
    top = hierarchy.n_levels
    curv = {top: None}
    targ = {top: None}
    fine = hierarchy.finest
    from mlresnet.net import ParamVector

    curv[top] = ParamVector.from_ravel(
        rng.uniform(0.5, 2.0, fine.n_params), fine)
    targ[top] = ParamVector.from_ravel(
        rng.normal(0.0, 1.0, fine.n_params), fine)
    for level in range(top, 1, -1):
        pair = hierarchy.pair(level)
        curv[level - 1] = pair.restrict_gradient(curv[level])
        targ[level - 1] = pair.restrict_params(targ[level])

    def factory(spec, coupling):
        return QuadraticObjective(spec, curv[spec.level], targ[spec.level], coupling)

    return factory, curv, targ


def counting_accuracy(probs, labels):
    """Accuracy by explicit counting with lowest-index tie-breaking."""
    hits = 0
    for row, label_row in zip(probs, labels):
        best = 0
        for i, p in enumerate(row):
            if p > row[best]:
                best = i
        truth = 0
        for i, c in enumerate(label_row):
            if c > label_row[truth]:
                truth = i
        hits += int(best == truth)
    return hits / len(labels)
