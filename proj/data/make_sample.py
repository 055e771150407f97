#!/usr/bin/env python3
"""Generates the bundled sample flow CSV (data/sample_flows.csv).

Synthetic traffic for one day (2016-04-11) in the canonical 12-column layout
(te,td,sa,da,sp,dp,pr,flg,fwd,stos,pkt,byt; fwd/stos are filler columns that
readers must ignore).  Ninety client hosts talk to a fixed set of servers in
short sessions; packet counts, byte volumes, durations and flags follow
protocol-appropriate distributions, so every record satisfies the five
protocol-validity tests.
"""

import random

SEED = 20160411
N_SESSIONS = 2600
DAY = "2016-04-11"

rng = random.Random(SEED)

clients = [f"42.219.156.{i}" for i in range(1, 91)]
web_servers = [f"52.85.{rng.randrange(0, 256)}.{rng.randrange(1, 255)}" for _ in range(14)]
web_servers += [f"104.16.{rng.randrange(0, 256)}.{rng.randrange(1, 255)}" for _ in range(8)]
dns_servers = ["8.8.8.8", "8.8.4.4", "42.219.152.2", "42.219.152.3"]
mail_servers = ["42.219.153.10", "42.219.153.11"]
ssh_servers = ["42.219.154.5", "42.219.154.6", "42.219.154.7"]
ntp_servers = ["132.163.96.1", "129.6.15.28"]

FLAGS_FULL = ".AP.SF"  # complete request/response exchange
FLAGS_PLAIN = ".A..SF"
FLAGS_SYN = "....S."
FLAGS_ACK = ".A...."
FLAGS_NONE = "......"


def ephemeral(avoid_web=False):
    while True:
        p = rng.randrange(1024, 65536)
        if avoid_web and p in (80, 443):
            continue
        return p


def tcp_flags():
    r = rng.random()
    if r < 0.62:
        return FLAGS_FULL
    if r < 0.86:
        return FLAGS_PLAIN
    if r < 0.94:
        return FLAGS_ACK
    return FLAGS_SYN


def web_flow(client):
    dp = 443 if rng.random() < 0.58 else 80
    pkt = max(2, int(rng.lognormvariate(2.0, 0.7)))
    pkt = min(pkt, 30)
    bpp = rng.uniform(120, 1200)
    byt = int(pkt * bpp)
    td = round(min(30.0, max(0.01, rng.lognormvariate(-1.0, 1.0))), 3)
    return (client, rng.choice(web_servers), ephemeral(), dp, "TCP",
            tcp_flags(), pkt, byt, td)


def dns_flow(client):
    pkt = 1 if rng.random() < 0.8 else 2
    byt = int(pkt * rng.uniform(60, 300))
    td = round(rng.uniform(0.0, 0.4), 3)
    return (client, rng.choice(dns_servers), ephemeral(avoid_web=True), 53,
            "UDP", FLAGS_NONE, pkt, byt, td)


def ssh_flow(client):
    pkt = max(4, int(rng.lognormvariate(2.6, 0.8)))
    pkt = min(pkt, 60)
    byt = int(pkt * rng.uniform(64, 400))
    td = round(min(120.0, max(0.2, rng.lognormvariate(1.5, 1.0))), 3)
    return (client, rng.choice(ssh_servers), ephemeral(), 22, "TCP",
            tcp_flags(), pkt, byt, td)


def mail_flow(client):
    pkt = max(3, int(rng.lognormvariate(2.2, 0.6)))
    pkt = min(pkt, 40)
    byt = int(pkt * rng.uniform(80, 900))
    td = round(min(60.0, max(0.05, rng.lognormvariate(0.0, 0.8))), 3)
    return (client, rng.choice(mail_servers), ephemeral(), 25, "TCP",
            tcp_flags(), pkt, byt, td)


def ntp_flow(client):
    byt = int(rng.uniform(76, 180))
    return (client, rng.choice(ntp_servers), ephemeral(avoid_web=True), 123,
            "UDP", FLAGS_NONE, 1, byt, round(rng.uniform(0.0, 0.1), 3))


def icmp_flow(client):
    pkt = rng.randrange(1, 4)
    byt = int(pkt * rng.uniform(28, 96))
    return (client, rng.choice(web_servers + dns_servers), 0, 0, "ICMP",
            FLAGS_NONE, pkt, byt, round(rng.uniform(0.0, 0.05), 3))


MAKERS = [
    (0.50, web_flow),
    (0.20, dns_flow),
    (0.10, ssh_flow),
    (0.08, mail_flow),
    (0.09, ntp_flow),
    (0.03, icmp_flow),
]


def pick_maker():
    r = rng.random()
    acc = 0.0
    for w, fn in MAKERS:
        acc += w
        if r < acc:
            return fn
    return MAKERS[-1][1]


def main():
    rows = []
    for _ in range(N_SESSIONS):
        client = rng.choice(clients)
        maker = pick_maker()
        start = rng.uniform(0, 86000)
        # Sessions are short bursts: a few related flows close in time.
        for _ in range(1 + min(14, int(rng.expovariate(0.28)))):
            sa, da, sp, dp, pr, flg, pkt, byt, td = maker(client)
            rows.append((start, td, sa, da, sp, dp, pr, flg, pkt, byt))
            start += rng.uniform(0.5, 8.0)
            if start >= 86400:
                break

    rows.sort(key=lambda r: r[0])
    with open("sample_flows.csv", "w") as f:
        f.write("te,td,sa,da,sp,dp,pr,flg,fwd,stos,pkt,byt\n")
        for start, td, sa, da, sp, dp, pr, flg, pkt, byt in rows:
            s = int(start)
            te = f"{DAY} {s // 3600:02d}:{(s // 60) % 60:02d}:{s % 60:02d}"
            f.write(f"{te},{td},{sa},{da},{sp},{dp},{pr},{flg},0,0,{pkt},{byt}\n")
    print(f"{len(rows)} rows")


if __name__ == "__main__":
    main()
