# Regenerates bace_synthetic.csv: python3 gen_bace_synthetic.py > bace_synthetic.csv
import random, itertools
random.seed(20240517)
rings = ["c1ccc({X})cc1","c1ccc({X})nc1","c1cnc({X})nc1","c1cc({X})sc1","c1cc({X})oc1",
 "C1CCC({X})CC1","c1ccc2cc({X})ccc2c1","c1ccc2[nH]cc({X})c2c1","c1ccc2[nH]c({X})nc2c1",
 "c1ccc2ncc({X})cc2c1","C1CC({X})CNC1","C1COCC({X})N1","C1CNCC({X})N1","C1C({X})C1",
 "C1CCC({X})C1","C1CC({X})OC1","c1oc({X})nc1","c1sc({X})nc1","c1[nH]nc({X})c1",
 "c1[nH]c({X})nc1","C1Cc2cc({X})ccc2CN1","C1Cc2cc({X})ccc2OC1","C1({X})NC(=N)N(C)C(=O)C1",
 "c1oc2ccc({X})cc2c1","c1ccc2c(c1)CCC2({X})","C1CCOC({X})C1","c1cnn({X})c1".replace("n({X})","n(C{X})")]
linkers = ["","C","CC","C(=O)N","NC(=O)","O","OC","CO","N","S(=O)(=O)N","NC(=O)N","CC(=O)N","C#C","CN"]
decos = ["","C","F","Cl","Br","OC","C(F)(F)F","C#N","CC","O","N","C(N)=O","OC(F)(F)F","CO","C(C)C","S(C)(=O)=O","N(C)C","OCC","C(=O)O","CCO"]
def put(r, x):
    return r.replace("({X})", "" if x=="" else "("+x+")").replace("{X}", x)
scaffolds = [(a,l,b) for a in rings for l in linkers for b in rings]
random.shuffle(scaffolds)
sizes=[]; k=0
while sum(sizes) < 1513:
    sizes.append(max(1, int(round(48/(k+1)**0.85)))); k+=1
sizes[-1] -= sum(sizes)-1513
rows=[]; seen=set()
for (a,l,b), n in zip(scaffolds, sizes):
    p = random.betavariate(0.7,0.9)
    combos = list(itertools.product(decos, decos)); random.shuffle(combos)
    got=0
    for x1,x2 in combos:
        if got==n: break
        s = put(a,x1)+l+put(b,x2)
        if s in seen: continue
        seen.add(s); rows.append((s, int(random.random()<p))); got+=1
print("mol,Class")
for s,y in rows: print(f"{s},{y}")
import sys; print(len(rows), len(sizes), max(sizes), file=sys.stderr)
