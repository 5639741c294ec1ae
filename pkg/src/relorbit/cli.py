"""Thin command-line client for the experiment service.

Every subcommand builds a RunConfig request and POSTs it to the service —
in-process through the ASGI app by default, or to a remote server via
--server. Exit codes: 0 success, 1 physics-domain failure (JSON on stderr),
2 usage errors.
"""

import argparse
import asyncio
import json
import sys


def _common(sp):
    sp.add_argument("--m", type=float, default=None, help="particle mass (default 1)")
    sp.add_argument("--c", type=float, default=None, help="light speed (default 1)")
    sp.add_argument("--k", type=float, default=None, help="coupling strength (default 1)")
    sp.add_argument("--potential", choices=["coulomb", "constant-momentum"], default=None)
    sp.add_argument("--config", metavar="FILE", default=None,
                    help="JSON config file; flags override its values")
    sp.add_argument("--server", metavar="URL", default=None,
                    help="remote service URL (default: run in-process)")
    sp.add_argument("--json", action="store_true", help="print the full JSON response")
    sp.add_argument("--out", metavar="FILE", default=None, help="write the CSV payload here")
    sp.add_argument("--json-out", metavar="FILE", default=None,
                    help="write the JSON sidecar/report here")


def _init_flags(sp):
    sp.add_argument("--q", type=float, nargs=2, metavar=("Q1", "Q2"), default=None)
    sp.add_argument("--p", type=float, nargs=2, metavar=("P1", "P2"), default=None)
    sp.add_argument("--ell", type=float, default=None)
    sp.add_argument("--h", type=float, default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="relorbit",
                                 description="Special-relativistic central-force "
                                             "dynamics experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)

    sp = sub.add_parser("simulate", help="integrate a trajectory, emit CSV")
    _common(sp)
    _init_flags(sp)
    sp.add_argument("--t0", type=float, default=None)
    sp.add_argument("--t1", type=float, default=None)
    sp.add_argument("--rtol", type=float, default=None)
    sp.add_argument("--atol", type=float, default=None)
    sp.add_argument("--method", choices=["rk45", "dop853"], default=None)

    sp = sub.add_parser("classify", help="energy-momentum classification")
    _common(sp)
    sp.add_argument("--ell", type=float, default=None)
    sp.add_argument("--h", type=float, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--grid", action="store_true", help="emit a diagram grid CSV")
    sp.add_argument("--ell-range", type=float, nargs=3, metavar=("MIN", "MAX", "N"),
                    default=None)
    sp.add_argument("--h-range", type=float, nargs=3, metavar=("MIN", "MAX", "N"),
                    default=None)
    sp.add_argument("--jobs", type=int, default=None)

    sp = sub.add_parser("circular", help="circular-orbit solver")
    _common(sp)
    sp.add_argument("--r0", type=float, default=None)
    sp.add_argument("--scan", action="store_true",
                    help="scan L(r0) for constancy across radii")
    sp.add_argument("--scan-range", type=float, nargs=3, metavar=("MIN", "MAX", "N"),
                    default=None)

    sp = sub.add_parser("period", help="period function of the Clairaut centre")
    _common(sp)
    sp.add_argument("--ell", type=float, default=None)
    sp.add_argument("--rho0", type=float, default=None)
    sp.add_argument("--xi", type=float, nargs="+", default=None)
    sp.add_argument("--rtol", type=float, default=None)
    sp.add_argument("--jobs", type=int, default=None)

    sp = sub.add_parser("bertrand", help="build candidate families, certify obstruction")
    _common(sp)
    sp.add_argument("--a", type=float, nargs="+", default=None)
    sp.add_argument("--rho-star", type=float, default=None)
    sp.add_argument("--ell-star", type=float, default=None)
    sp.add_argument("--rho-range", type=float, nargs=2, metavar=("LO", "HI"), default=None)
    sp.add_argument("--rho0", type=float, nargs="+", default=None)
    sp.add_argument("--rtol", type=float, default=None)
    sp.add_argument("--jobs", type=int, default=None)

    sp = sub.add_parser("rungelenz", help="Runge-Lenz frame analysis along an orbit")
    _common(sp)
    _init_flags(sp)
    sp.add_argument("--n-periods", type=float, default=None)
    sp.add_argument("--rtol", type=float, default=None)

    sp = sub.add_parser("collision", help="regularized collision run and asymptotic fit")
    _common(sp)
    _init_flags(sp)
    sp.add_argument("--r-stop", type=float, default=None)
    sp.add_argument("--rtol", type=float, default=None)
    return ap


def _load_config(path):
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def _build_request(args):
    cfg = {"params": {}}
    if args.config:
        cfg.update(_load_config(args.config))
        cfg.setdefault("params", {})
    for key in ("m", "c", "k", "potential"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    cfg["command"] = args.command
    params = cfg["params"]

    def put(name, value):
        if value is not None:
            params[name] = value

    if args.command == "simulate":
        init = params.get("init", {})
        if args.q is not None and args.p is not None:
            init = {"q": list(args.q), "p": list(args.p)}
        elif args.ell is not None and args.h is not None:
            init = {"ell": args.ell, "h": args.h}
        params["init"] = init
        put("t0", args.t0)
        put("t1", args.t1)
        put("rtol", args.rtol)
        put("atol", args.atol)
        put("method", args.method)
    elif args.command == "classify":
        if args.grid:
            cfg["command"] = "classify-grid"
            if args.ell_range is not None:
                params["ell_min"], params["ell_max"] = args.ell_range[0], args.ell_range[1]
                params["n_ell"] = int(args.ell_range[2])
            if args.h_range is not None:
                params["h_min"], params["h_max"] = args.h_range[0], args.h_range[1]
                params["n_h"] = int(args.h_range[2])
            put("tol", args.tol)
            put("jobs", args.jobs)
        else:
            put("ell", args.ell)
            put("h", args.h)
            put("tol", args.tol)
    elif args.command == "circular":
        put("r0", args.r0)
        if args.scan:
            params["scan"] = True
        if args.scan_range is not None:
            params["scan_r_min"], params["scan_r_max"] = args.scan_range[0], args.scan_range[1]
            params["scan_n"] = int(args.scan_range[2])
    elif args.command == "period":
        put("ell", args.ell)
        put("rho0", args.rho0)
        put("xi", args.xi)
        put("rtol", args.rtol)
        put("jobs", args.jobs)
    elif args.command == "bertrand":
        put("a", args.a)
        put("rho_star", args.rho_star)
        put("ell_star", args.ell_star)
        put("rho_range", args.rho_range)
        put("rho0", args.rho0)
        put("rtol", args.rtol)
        put("jobs", args.jobs)
    elif args.command == "rungelenz":
        init = params.get("init", {})
        if args.q is not None and args.p is not None:
            init = {"q": list(args.q), "p": list(args.p)}
        elif args.ell is not None and args.h is not None:
            init = {"ell": args.ell, "h": args.h}
        params["init"] = init
        put("n_periods", args.n_periods)
        put("rtol", args.rtol)
    elif args.command == "collision":
        init = params.get("init", {})
        if args.q is not None and args.p is not None:
            init = {"q": list(args.q), "p": list(args.p)}
        elif args.ell is not None and args.h is not None:
            init = {"ell": args.ell, "h": args.h}
        params["init"] = init
        put("r_stop", args.r_stop)
        put("rtol", args.rtol)
    return cfg


def _post(path, payload, server):
    import httpx

    if server:
        try:
            return httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
        except httpx.HTTPError as exc:
            _fail({"code": "connection", "message": str(exc)})

    from .service.app import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://relorbit.local") as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _fail(detail):
    sys.stderr.write(json.dumps(detail) + "\n")
    raise SystemExit(1)


def _sidecar_of(command, body):
    if command == "period":
        return body.get("sidecar")
    if command == "collision":
        return body.get("fit")
    if command == "bertrand":
        return {"families": [{k: v for k, v in fam.items() if k != "family_csv"}
                             for fam in body.get("families", [])]}
    return {k: v for k, v in body.items() if k not in ("csv", "config")}


def _csv_payloads(command, body):
    if command == "bertrand":
        fams = body.get("families", [])
        return [(fam["a"], fam["family_csv"]) for fam in fams]
    if "csv" in body:
        return [(None, body["csv"])]
    return []


def main(argv=None):
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        uvicorn.run("relorbit.service.app:app", host=args.host, port=args.port)
        return 0

    try:
        payload = _build_request(args)
    except (OSError, ValueError) as exc:
        _fail({"code": "invalid-config", "message": str(exc)})

    command = payload["command"]
    resp = _post("/" + command, payload, args.server)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", {})
        except ValueError:
            detail = {}
        if not isinstance(detail, dict) or "code" not in detail:
            detail = {"code": "request-error", "message": str(detail) or resp.text}
        _fail(detail)
    body = resp.json()

    if args.out:
        payloads = _csv_payloads(command, body)
        if not payloads:
            _fail({"code": "no-csv", "message": "command %r has no CSV payload" % command})
        for tag, text in payloads:
            path = args.out
            if tag is not None and len(payloads) > 1:
                stem, dot, ext = args.out.rpartition(".")
                path = "%s_a%g.%s" % (stem, tag, ext) if dot else "%s_a%g" % (args.out, tag)
            with open(path, "w", newline="") as fh:
                fh.write(text)
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(_sidecar_of(command, body), fh, indent=2)
            fh.write("\n")

    if args.json:
        print(json.dumps(body, indent=2))
    else:
        print(body.get("summary", ""))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
